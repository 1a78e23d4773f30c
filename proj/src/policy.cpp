#include "semcom/policy.hpp"

#include <algorithm>

namespace semcom {

std::vector<ElementKind> escalation_ladder(LadderPreset preset, TaskKind task) {
    if (preset == LadderPreset::PROGRESSIVE)
        return {ElementKind::TEXT, ElementKind::ASEG, ElementKind::BSEG, ElementKind::SIMG};
    switch (task) {
        case TaskKind::CAPTION: return {ElementKind::TEXT};
        case TaskKind::SEGMENTATION: return {ElementKind::TEXT, ElementKind::ASEG};
        case TaskKind::RECONSTRUCTION: return {ElementKind::TEXT, ElementKind::BSEG};
    }
    return {ElementKind::TEXT};
}

std::vector<ElementKind> knowledge_policy(TaskKind task) {
    switch (task) {
        case TaskKind::CAPTION: return {ElementKind::TEXT};
        case TaskKind::SEGMENTATION: return {ElementKind::ASEG};
        case TaskKind::RECONSTRUCTION: return {ElementKind::TEXT, ElementKind::BSEG};
    }
    return {ElementKind::TEXT};
}

TransmitterSession::TransmitterSession(SemanticBundle bundle, std::vector<ElementKind> ladder)
    : bundle_(std::move(bundle)), ladder_(std::move(ladder)) {
    if (ladder_.empty() || ladder_[0] != ElementKind::TEXT)
        throw InvariantViolation("ladder must open with TEXT");
    for (size_t i = 0; i < ladder_.size(); ++i)
        for (size_t j = i + 1; j < ladder_.size(); ++j)
            if (ladder_[i] == ladder_[j]) throw InvariantViolation("ladder repeats a kind");
}

std::optional<ElementKind> TransmitterSession::next_kind() const {
    if (status_ == SessionStatus::DONE || pos_ >= ladder_.size()) return std::nullopt;
    return ladder_[pos_];
}

SemanticElement TransmitterSession::initial_transmission() {
    if (status_ == SessionStatus::DONE || pos_ != 0)
        throw AlreadyStarted("session already transmitted its opening element");
    ++pos_;
    return element_for(ElementKind::TEXT);
}

std::optional<SemanticElement> TransmitterSession::on_feedback(const FeedbackMessage& feedback) {
    if (status_ == SessionStatus::DONE) throw ProtocolViolation("feedback on finished session");
    if (pos_ == 0) throw ProtocolViolation("feedback before the opening transmission");
    if (feedback.type == FeedbackType::COMPLETE) {
        status_ = SessionStatus::DONE;
        return std::nullopt;
    }
    if (pos_ >= ladder_.size()) throw ProtocolViolation("request past the end of the ladder");
    if (feedback.kind != ladder_[pos_])
        throw ProtocolViolation("requested kind is not the next ladder entry");
    if (!filter_ && !feedback.category_ids.empty())
        filter_ = std::set<uint8_t>(feedback.category_ids.begin(), feedback.category_ids.end());
    ++pos_;
    return element_for(feedback.kind);
}

SemanticElement TransmitterSession::element_for(ElementKind kind) const {
    switch (kind) {
        case ElementKind::TEXT: return SemanticElement{bundle_.text};
        case ElementKind::ASEG:
            return SemanticElement{filter_ ? filter_aseg(bundle_.aseg, *filter_) : bundle_.aseg};
        case ElementKind::BSEG:
            return SemanticElement{filter_ ? filter_bseg(bundle_.bseg, *filter_) : bundle_.bseg};
        case ElementKind::SIMG:
            return SemanticElement{filter_
                                       ? filter_subimages(bundle_.subimages, bundle_.aseg, *filter_)
                                       : bundle_.subimages};
    }
    throw InvariantViolation("unknown ladder kind");
}

AsegMap filter_aseg(const AsegMap& aseg, const std::set<uint8_t>& categories) {
    AsegMap out;
    out.width = aseg.width;
    out.height = aseg.height;
    for (const auto& inst : aseg.instances)
        if (categories.count(inst.category_id)) out.instances.push_back(inst);
    out.class_grid = aseg.class_grid;
    for (auto& c : out.class_grid)
        if (c != kBackgroundClass && !categories.count(c)) c = kBackgroundClass;
    return out;
}

BsegMap filter_bseg(const BsegMap& bseg, const std::set<uint8_t>& categories) {
    BsegMap out;
    out.width = bseg.width;
    out.height = bseg.height;
    for (const auto& region : bseg.regions)
        if (categories.count(region.category_id)) out.regions.push_back(region);
    return out;
}

std::vector<SubImage> filter_subimages(const std::vector<SubImage>& crops, const AsegMap& aseg,
                                       const std::set<uint8_t>& categories) {
    std::vector<SubImage> out;
    for (const auto& crop : crops) {
        auto it = std::find_if(aseg.instances.begin(), aseg.instances.end(),
                               [&](const AsegInstance& inst) {
                                   return inst.instance_id == crop.instance_id;
                               });
        if (it != aseg.instances.end() && categories.count(it->category_id))
            out.push_back(crop);
    }
    return out;
}

}  // namespace semcom
