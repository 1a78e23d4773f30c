#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace semcom {

enum class TaskKind : uint8_t { CAPTION = 0, SEGMENTATION = 1, RECONSTRUCTION = 2 };

const char* to_string(TaskKind k);
std::optional<TaskKind> parse_task_kind(const std::string& name);

// A receiver-side task: what the receiver wants to do with the image.
struct TaskDescriptor {
    TaskKind kind = TaskKind::CAPTION;
    std::string description;
    bool operator==(const TaskDescriptor&) const = default;
};

}  // namespace semcom
