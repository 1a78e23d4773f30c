#include "semcom/protocol.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "semcom/bytes.hpp"

namespace semcom {

namespace {

constexpr std::array<uint8_t, 4> kMagic{'S', 'C', 'M', '1'};
constexpr uint8_t kProtocolVersion = 1;

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

bool valid_frame_type(uint8_t t) { return t >= 0x01 && t <= 0x05; }

}  // namespace

const char* to_string(FrameType t) {
    switch (t) {
        case FrameType::DATA: return "DATA";
        case FrameType::REQUEST: return "REQUEST";
        case FrameType::COMPLETE: return "COMPLETE";
        case FrameType::ACK: return "ACK";
        case FrameType::NAK: return "NAK";
    }
    return "UNKNOWN";
}

uint32_t crc32(const uint8_t* data, size_t len) {
    static const std::array<uint32_t, 256> table = make_crc_table();
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

uint32_t crc32(const std::vector<uint8_t>& data) { return crc32(data.data(), data.size()); }

std::vector<uint8_t> frame_encode(const Frame& f) {
    if (f.payload.size() > kMaxPayload)
        throw InvariantViolation("frame payload exceeds 1024 bytes");
    if (!valid_frame_type(static_cast<uint8_t>(f.ftype)))
        throw InvariantViolation("unknown frame type");
    ByteWriter w;
    w.raw(kMagic.data(), kMagic.size());
    w.u8(kProtocolVersion);
    w.u8(static_cast<uint8_t>(f.ftype));
    w.u16(f.session_id);
    w.u16(f.seq);
    w.u8(f.flags);
    w.u16(static_cast<uint16_t>(f.payload.size()));
    w.raw(f.payload.data(), f.payload.size());
    w.u32(crc32(w.out));
    return w.out;
}

Frame frame_decode(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kFrameOverhead) throw Truncated("frame shorter than minimum");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw BadMagic("bad magic");
    if (bytes[4] != kProtocolVersion) throw BadVersion("unsupported version");
    uint16_t payload_len = static_cast<uint16_t>(bytes[11] | (bytes[12] << 8));
    if (bytes.size() != kFrameOverhead + payload_len)
        throw Truncated("frame length does not match payload_len");
    uint32_t stored = 0;
    for (int i = 3; i >= 0; --i) stored = (stored << 8) | bytes[bytes.size() - 4 + size_t(i)];
    if (crc32(bytes.data(), bytes.size() - 4) != stored) throw CrcMismatch("crc mismatch");
    if (payload_len > kMaxPayload) throw ProtocolViolation("payload_len exceeds 1024");
    if (!valid_frame_type(bytes[5])) throw ProtocolViolation("unknown frame type");
    Frame f;
    f.ftype = static_cast<FrameType>(bytes[5]);
    f.session_id = static_cast<uint16_t>(bytes[6] | (bytes[7] << 8));
    f.seq = static_cast<uint16_t>(bytes[8] | (bytes[9] << 8));
    f.flags = bytes[10];
    f.payload.assign(bytes.begin() + 13, bytes.end() - 4);
    return f;
}

std::vector<Frame> fragment(const std::vector<uint8_t>& element_bytes, uint16_t session_id,
                            uint16_t base_seq) {
    std::vector<Frame> frames;
    size_t off = 0;
    uint16_t seq = base_seq;
    do {
        size_t n = std::min(kMaxPayload, element_bytes.size() - off);
        Frame f;
        f.ftype = FrameType::DATA;
        f.session_id = session_id;
        f.seq = seq++;
        f.payload.assign(element_bytes.begin() + ptrdiff_t(off),
                         element_bytes.begin() + ptrdiff_t(off + n));
        off += n;
        if (off == element_bytes.size()) f.flags = kFlagLastFragment;
        frames.push_back(std::move(f));
    } while (off < element_bytes.size());
    return frames;
}

std::vector<uint8_t> reassemble(std::vector<Frame> frames) {
    if (frames.empty()) throw MissingFragment("no fragments");
    std::sort(frames.begin(), frames.end(),
              [](const Frame& a, const Frame& b) { return a.seq < b.seq; });
    std::vector<uint8_t> out;
    for (size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.ftype != FrameType::DATA) throw ProtocolViolation("non-data fragment");
        if (f.session_id != frames[0].session_id)
            throw ProtocolViolation("fragments from different sessions");
        if (i > 0) {
            if (f.seq == frames[i - 1].seq) throw DuplicateSeq("duplicate fragment seq");
            if (f.seq != uint16_t(frames[i - 1].seq + 1)) throw MissingFragment("seq gap");
        }
        bool last = i + 1 == frames.size();
        if (last && !f.last_fragment()) throw MissingFragment("last fragment not flagged");
        if (!last && f.last_fragment()) throw ProtocolViolation("interior last flag");
        out.insert(out.end(), f.payload.begin(), f.payload.end());
    }
    return out;
}

std::vector<uint8_t> encode_feedback(const FeedbackMessage& msg) {
    if (msg.type == FeedbackType::COMPLETE) return {};
    ByteWriter w;
    w.u8(static_cast<uint8_t>(msg.kind));
    w.u8(static_cast<uint8_t>(msg.category_ids.size()));
    for (uint8_t id : msg.category_ids) w.u8(id);
    return w.out;
}

FeedbackMessage decode_feedback(FrameType ftype, const std::vector<uint8_t>& payload) {
    FeedbackMessage msg;
    if (ftype == FrameType::COMPLETE) {
        if (!payload.empty()) throw ProtocolViolation("complete carries a payload");
        return msg;
    }
    if (ftype != FrameType::REQUEST) throw ProtocolViolation("not a feedback frame");
    if (payload.size() < 2) throw ProtocolViolation("request payload too short");
    uint8_t kind = payload[0];
    if (kind < 0x01 || kind > 0x04) throw ProtocolViolation("request names no element kind");
    if (payload.size() != 2u + payload[1])
        throw ProtocolViolation("request category count mismatch");
    msg.type = FeedbackType::REQUEST;
    msg.kind = static_cast<ElementKind>(kind);
    msg.category_ids.assign(payload.begin() + 2, payload.end());
    return msg;
}

FrameType feedback_frame_type(const FeedbackMessage& msg) {
    return msg.type == FeedbackType::REQUEST ? FrameType::REQUEST : FrameType::COMPLETE;
}

std::string session_log_jsonl(const SessionLog& log) {
    std::ostringstream out;
    for (const auto& e : log.events) {
        out << "{\"tick\":" << e.tick << ",\"direction\":\"" << e.direction
            << "\",\"ftype\":\"" << to_string(e.ftype) << "\",\"seq\":" << e.seq
            << ",\"bytes\":" << e.bytes << ",\"event\":\"" << e.event << "\"}\n";
    }
    return out.str();
}

namespace {

struct Exchanger {
    const SessionConfig& cfg;
    ByteChannel& channel;
    SessionLog& log;
    uint64_t tick = 0;

    void note(const char* dir, FrameType ftype, uint16_t seq, size_t bytes, const char* event) {
        log.events.push_back(SessionEvent{tick, dir, ftype, seq, bytes, event});
    }

    // One stop-and-wait delivery. Returns the frame as seen by the peer.
    Frame deliver(const Frame& f, const char* dir, bool subject) {
        auto wire = frame_encode(f);
        const char* peer = dir[0] == 't' ? "rx" : "tx";
        for (int attempt = 0;; ++attempt) {
            if (attempt > cfg.max_retries)
                throw SessionAbort(std::string("retries exhausted for ") +
                                   to_string(f.ftype) + " seq " + std::to_string(f.seq));
            if (attempt > 0) ++log.retransmissions;
            tick += 1;
            log.wire_bytes += wire.size();
            note(dir, f.ftype, f.seq, wire.size(), attempt == 0 ? "send" : "retransmit");
            std::vector<uint8_t> got = subject ? channel(wire) : wire;
            if (got.empty()) {
                tick += 3;
                note(dir, f.ftype, f.seq, 0, "timeout");
                continue;
            }
            try {
                Frame seen = frame_decode(got);
                Frame ack{FrameType::ACK, f.session_id, f.seq, 0, {}};
                log.wire_bytes += frame_encode(ack).size();
                note(peer, FrameType::ACK, f.seq, kFrameOverhead, "ack");
                return seen;
            } catch (const Error&) {
                Frame nak{FrameType::NAK, f.session_id, f.seq, 0, {}};
                log.wire_bytes += frame_encode(nak).size();
                note(peer, FrameType::NAK, f.seq, kFrameOverhead, "nak");
            }
        }
    }
};

}  // namespace

SessionLog run_session(TransmitterSession& tx, const ReceiverContext& rx, ByteChannel channel,
                       const SessionConfig& cfg) {
    if (!rx.table || !rx.vocab || !rx.gazetteer)
        throw InvariantViolation("receiver context incomplete");
    SessionLog log;
    log.session_id = cfg.session_id;
    Exchanger ex{cfg, channel, log};
    std::function<double(ElementKind, size_t)> accounted = cfg.accounted_size;
    if (!accounted) accounted = [](ElementKind, size_t bytes) { return double(bytes); };

    uint16_t data_seq = 0;
    uint16_t feedback_seq = 0;
    IsText caption{""};

    SemanticElement element = tx.initial_transmission();
    while (true) {
        auto encoded = encode_element(element);
        auto frames = fragment(encoded, cfg.session_id, data_seq);
        data_seq = uint16_t(data_seq + frames.size());
        std::vector<Frame> arrived;
        for (const auto& f : frames) arrived.push_back(ex.deliver(f, "tx", true));
        auto delivered_bytes = reassemble(std::move(arrived));
        SemanticElement delivered = decode_element(delivered_bytes);

        DeliveredElement entry{delivered.kind(), encoded.size(),
                               accounted(delivered.kind(), encoded.size()), delivered};
        log.semantic_bytes += entry.accounted_bytes;
        log.delivered.push_back(std::move(entry));

        if (delivered.kind() == ElementKind::TEXT) caption = delivered.text();
        std::optional<ElementKind> next;
        if (log.delivered.size() < rx.ladder.size()) next = rx.ladder[log.delivered.size()];
        auto decision =
            assess_relevance(rx.task, caption, *rx.table, *rx.vocab, *rx.gazetteer,
                             cfg.threshold);
        auto feedback = make_feedback(decision, next, *rx.vocab);

        Frame fb_frame{feedback_frame_type(feedback), cfg.session_id, feedback_seq++, 0,
                       encode_feedback(feedback)};
        Frame fb_seen = ex.deliver(fb_frame, "rx", cfg.feedback_over_channel);
        auto fb_decoded = decode_feedback(fb_seen.ftype, fb_seen.payload);

        auto reply = tx.on_feedback(fb_decoded);
        if (!reply) {
            log.completed = true;
            break;
        }
        element = *reply;
    }
    log.ticks = ex.tick;
    return log;
}

TransferResult run_transfer(const std::vector<TransferItem>& items, ByteChannel channel,
                            const SessionConfig& cfg) {
    TransferResult result;
    result.log.session_id = cfg.session_id;
    Exchanger ex{cfg, channel, result.log};

    uint16_t seq = 0;
    for (const auto& item : items) {
        auto frames = fragment(item.payload, cfg.session_id, seq);
        seq = uint16_t(seq + frames.size());
        std::vector<Frame> arrived;
        for (const auto& f : frames) arrived.push_back(ex.deliver(f, "tx", true));
        result.delivered.push_back(reassemble(std::move(arrived)));
        result.log.semantic_bytes += item.accounted_bytes;
    }
    result.log.completed = true;
    result.log.ticks = ex.tick;
    return result;
}

}  // namespace semcom
