#pragma once

// Transmitter-side policy controller: picks the opening transmission and
// escalates through sub-semantics as feedback arrives, plus the fixed
// per-task plans used by the non-adaptive baselines.

#include <optional>
#include <set>
#include <vector>

#include "semcom/feedback.hpp"
#include "semcom/semantics.hpp"
#include "semcom/task.hpp"

namespace semcom {

// TABLE2 escalates one step per task kind; PROGRESSIVE walks the full
// text, coarse map, contour map, sub-image ladder for every task.
enum class LadderPreset { TABLE2, PROGRESSIVE };

std::vector<ElementKind> escalation_ladder(LadderPreset preset, TaskKind task);

// Fixed plan of the knowledge-base baseline, sent unconditionally.
std::vector<ElementKind> knowledge_policy(TaskKind task);

enum class SessionStatus { ACTIVE, DONE };

class TransmitterSession {
  public:
    TransmitterSession(SemanticBundle bundle, std::vector<ElementKind> ladder);

    // Sends the ladder's opening element (always TEXT). Throws AlreadyStarted
    // on a second call or a finished session.
    SemanticElement initial_transmission();

    // COMPLETE finishes the session; REQUEST returns the next ladder element
    // with instances filtered to the requested categories. Requests out of
    // ladder order throw ProtocolViolation.
    std::optional<SemanticElement> on_feedback(const FeedbackMessage& feedback);

    SessionStatus status() const { return status_; }
    size_t position() const { return pos_; }
    std::optional<ElementKind> next_kind() const;
    const SemanticBundle& bundle() const { return bundle_; }

  private:
    SemanticElement element_for(ElementKind kind) const;

    SemanticBundle bundle_;
    std::vector<ElementKind> ladder_;
    size_t pos_ = 0;
    SessionStatus status_ = SessionStatus::ACTIVE;
    std::optional<std::set<uint8_t>> filter_;
};

// Standalone filtered views of bundle parts, shared with the session logic.
AsegMap filter_aseg(const AsegMap& aseg, const std::set<uint8_t>& categories);
BsegMap filter_bseg(const BsegMap& bseg, const std::set<uint8_t>& categories);
std::vector<SubImage> filter_subimages(const std::vector<SubImage>& crops, const AsegMap& aseg,
                                       const std::set<uint8_t>& categories);

}  // namespace semcom
