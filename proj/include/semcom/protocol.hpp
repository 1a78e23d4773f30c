#pragma once

// Wire protocol: framed, CRC-protected transport of semantic elements and
// feedback messages over a byte channel, with stop-and-wait reliability
// driven by a deterministic tick loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semcom/correlation.hpp"
#include "semcom/feedback.hpp"
#include "semcom/policy.hpp"
#include "semcom/semantics.hpp"
#include "semcom/task.hpp"

namespace semcom {

enum class FrameType : uint8_t {
    DATA = 0x01,
    REQUEST = 0x02,
    COMPLETE = 0x03,
    ACK = 0x04,
    NAK = 0x05,
};

const char* to_string(FrameType t);

constexpr size_t kMaxPayload = 1024;
constexpr size_t kFrameOverhead = 17;  // header 13 + crc 4
constexpr uint8_t kFlagLastFragment = 0x01;

struct Frame {
    FrameType ftype = FrameType::DATA;
    uint16_t session_id = 0;
    uint16_t seq = 0;
    uint8_t flags = 0;
    std::vector<uint8_t> payload;

    bool last_fragment() const { return (flags & kFlagLastFragment) != 0; }
    bool operator==(const Frame&) const = default;
};

// CRC-32 with the reflected polynomial 0xEDB88320 (check value of "123456789"
// is 0xCBF43926).
uint32_t crc32(const uint8_t* data, size_t len);
uint32_t crc32(const std::vector<uint8_t>& data);

std::vector<uint8_t> frame_encode(const Frame& f);
Frame frame_decode(const std::vector<uint8_t>& bytes);

std::vector<Frame> fragment(const std::vector<uint8_t>& element_bytes, uint16_t session_id,
                            uint16_t base_seq = 0);
std::vector<uint8_t> reassemble(std::vector<Frame> frames);

// Feedback payload layout: REQUEST = kind (1 B) + category count (1 B) +
// category ids; COMPLETE = empty.
std::vector<uint8_t> encode_feedback(const FeedbackMessage& msg);
FeedbackMessage decode_feedback(FrameType ftype, const std::vector<uint8_t>& payload);
FrameType feedback_frame_type(const FeedbackMessage& msg);

// Byte-in, byte-out channel; output shorter than input models frame loss.
using ByteChannel = std::function<std::vector<uint8_t>(const std::vector<uint8_t>&)>;

struct SessionConfig {
    uint16_t session_id = 0;
    // Retransmissions allowed per frame beyond the first attempt.
    int max_retries = 8;
    // When set, REQUEST/COMPLETE frames suffer the channel too; ACK and NAK
    // always ride an error-free reverse control path.
    bool feedback_over_channel = false;
    double threshold = kDefaultRelevanceThreshold;
    // Semantic-level size accounting per delivered element; defaults to the
    // measured encoding size.
    std::function<double(ElementKind, size_t)> accounted_size;
};

struct ReceiverContext {
    TaskDescriptor task;
    const EmbeddingTable* table = nullptr;
    const ClassVocabulary* vocab = nullptr;
    const std::set<std::string>* gazetteer = nullptr;
    std::vector<ElementKind> ladder;
};

struct SessionEvent {
    uint64_t tick = 0;
    std::string direction;  // "tx" or "rx"
    FrameType ftype = FrameType::DATA;
    uint16_t seq = 0;
    size_t bytes = 0;
    std::string event;
};

struct DeliveredElement {
    ElementKind kind = ElementKind::TEXT;
    size_t encoded_bytes = 0;
    double accounted_bytes = 0.0;
    SemanticElement element{IsText{"?"}};
};

struct SessionLog {
    uint16_t session_id = 0;
    bool completed = false;
    uint64_t ticks = 0;
    double semantic_bytes = 0.0;
    size_t wire_bytes = 0;
    size_t retransmissions = 0;
    std::vector<DeliveredElement> delivered;
    std::vector<SessionEvent> events;
};

// One event per line: {"tick":..,"direction":"..","ftype":"..","seq":..,
// "bytes":..,"event":".."}.
std::string session_log_jsonl(const SessionLog& log);

// Drives one transmitter/receiver pair to completion over the channel.
// Throws SessionAbort when a frame exhausts its retries.
SessionLog run_session(TransmitterSession& tx, const ReceiverContext& rx, ByteChannel channel,
                       const SessionConfig& cfg);

// One opaque payload to push through the reliable transport.
struct TransferItem {
    std::vector<uint8_t> payload;
    double accounted_bytes = 0.0;
};

struct TransferResult {
    SessionLog log;
    std::vector<std::vector<uint8_t>> delivered;
};

// Fixed-plan counterpart of run_session: every item goes out fragmented and
// acknowledged, with no semantic feedback in between. Throws SessionAbort when
// a frame exhausts its retries.
TransferResult run_transfer(const std::vector<TransferItem>& items, ByteChannel channel,
                            const SessionConfig& cfg);

}  // namespace semcom
