#include "semcom/task.hpp"

namespace semcom {

const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::CAPTION: return "CAPTION";
        case TaskKind::SEGMENTATION: return "SEGMENTATION";
        case TaskKind::RECONSTRUCTION: return "RECONSTRUCTION";
    }
    return "UNKNOWN";
}

std::optional<TaskKind> parse_task_kind(const std::string& name) {
    if (name == "CAPTION") return TaskKind::CAPTION;
    if (name == "SEGMENTATION") return TaskKind::SEGMENTATION;
    if (name == "RECONSTRUCTION") return TaskKind::RECONSTRUCTION;
    return std::nullopt;
}

}  // namespace semcom
