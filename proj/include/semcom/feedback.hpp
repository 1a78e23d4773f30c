#pragma once

#include <cstdint>
#include <vector>

#include "semcom/semantics.hpp"

namespace semcom {

enum class FeedbackType : uint8_t { REQUEST, COMPLETE };

// Receiver-to-transmitter control message. REQUEST names the next element
// kind to send plus a category filter; an empty filter means no filtering.
// COMPLETE ends the session.
struct FeedbackMessage {
    FeedbackType type = FeedbackType::COMPLETE;
    ElementKind kind = ElementKind::TEXT;
    std::vector<uint8_t> category_ids;
    bool operator==(const FeedbackMessage&) const = default;
};

}  // namespace semcom
