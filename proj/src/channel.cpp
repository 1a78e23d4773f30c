#include "semcom/channel.hpp"

#include <cmath>
#include <memory>

namespace semcom {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}

std::string to_string(ChannelMode mode) {
    switch (mode) {
        case ChannelMode::PERFECT: return "perfect";
        case ChannelMode::AWGN_UNCODED: return "awgn_uncoded";
        case ChannelMode::AWGN_LDPC: return "awgn_ldpc";
    }
    return "unknown";
}

ChannelMode parse_channel_mode(const std::string& name) {
    if (name == "perfect") return ChannelMode::PERFECT;
    if (name == "awgn_uncoded") return ChannelMode::AWGN_UNCODED;
    if (name == "awgn_ldpc") return ChannelMode::AWGN_LDPC;
    throw ParseError("unknown channel mode " + name);
}

std::vector<uint8_t> bytes_to_bits(const std::vector<uint8_t>& bytes) {
    std::vector<uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t b : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
    return bits;
}

std::vector<uint8_t> bits_to_bytes(const std::vector<uint8_t>& bits) {
    if (bits.size() % 8 != 0) throw DimMismatch("bit count is not a multiple of 8");
    std::vector<uint8_t> bytes(bits.size() / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        bytes[i / 8] = uint8_t(bytes[i / 8] << 1 | (bits[i] & 1));
    return bytes;
}

std::vector<std::complex<double>> qpsk_modulate(const std::vector<uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw DimMismatch("qpsk needs an even bit count");
    std::vector<std::complex<double>> symbols(bits.size() / 2);
    for (size_t s = 0; s < symbols.size(); ++s) {
        const uint8_t first = bits[2 * s] & 1;
        const uint8_t second = bits[2 * s + 1] & 1;
        symbols[s] = {second == 0 ? kInvSqrt2 : -kInvSqrt2,
                      first == 0 ? kInvSqrt2 : -kInvSqrt2};
    }
    return symbols;
}

QpskSoftBits qpsk_demodulate(const std::vector<std::complex<double>>& symbols,
                             double noise_variance) {
    if (noise_variance <= 0.0) throw InvariantViolation("noise variance must be positive");
    QpskSoftBits out;
    out.llrs.resize(symbols.size() * 2);
    out.hard_bits.resize(symbols.size() * 2);
    const double scale = 2.0 * std::sqrt(2.0) / noise_variance;
    for (size_t s = 0; s < symbols.size(); ++s) {
        out.llrs[2 * s] = scale * symbols[s].imag();
        out.llrs[2 * s + 1] = scale * symbols[s].real();
        out.hard_bits[2 * s] = out.llrs[2 * s] < 0.0 ? 1 : 0;
        out.hard_bits[2 * s + 1] = out.llrs[2 * s + 1] < 0.0 ? 1 : 0;
    }
    return out;
}

double channel_noise_variance(double ebn0_db, int bits_per_symbol, double code_rate) {
    if (bits_per_symbol <= 0 || code_rate <= 0.0)
        throw InvariantViolation("modulation order and code rate must be positive");
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    return 1.0 / (code_rate * bits_per_symbol * ebn0);
}

void add_awgn(std::vector<std::complex<double>>& symbols, double noise_variance, Rng& rng) {
    const double sigma = std::sqrt(noise_variance / 2.0);
    for (auto& y : symbols)
        y += std::complex<double>(sigma * rng.gaussian(), sigma * rng.gaussian());
}

const LdpcCode& transport_code() {
    static const LdpcCode code = peg_construct(1024, 3, 6, kLdpcSeed);
    return code;
}

namespace {

std::vector<uint8_t> transmit_uncoded(const std::vector<uint8_t>& bytes, double ebn0_db,
                                      Rng& rng) {
    const auto bits = bytes_to_bits(bytes);
    auto symbols = qpsk_modulate(bits);
    const double n0 = channel_noise_variance(ebn0_db, 2, 1.0);
    add_awgn(symbols, n0, rng);
    return bits_to_bytes(qpsk_demodulate(symbols, n0).hard_bits);
}

std::vector<uint8_t> transmit_ldpc(const std::vector<uint8_t>& bytes, double ebn0_db,
                                   Rng& rng) {
    const LdpcCode& code = transport_code();
    auto bits = bytes_to_bits(bytes);
    const size_t payload_bits = bits.size();
    const size_t k = size_t(code.k);
    if (bits.size() % k != 0) bits.resize(bits.size() + (k - bits.size() % k), 0);

    const double n0 = channel_noise_variance(ebn0_db, 2, double(code.k) / double(code.n));
    std::vector<uint8_t> decoded_bits;
    decoded_bits.reserve(bits.size());
    for (size_t off = 0; off < bits.size(); off += k) {
        std::vector<uint8_t> info(bits.begin() + long(off), bits.begin() + long(off + k));
        auto symbols = qpsk_modulate(ldpc_encode(info, code));
        add_awgn(symbols, n0, rng);
        auto soft = qpsk_demodulate(symbols, n0);
        auto result = ldpc_decode(soft.llrs, code);
        decoded_bits.insert(decoded_bits.end(), result.info.begin(), result.info.end());
    }
    decoded_bits.resize(payload_bits);
    return bits_to_bytes(decoded_bits);
}

}  // namespace

std::vector<uint8_t> transmit(const std::vector<uint8_t>& bytes, const ChannelConfig& config,
                              Rng& rng) {
    if (bytes.empty()) return {};
    switch (config.mode) {
        case ChannelMode::PERFECT: return bytes;
        case ChannelMode::AWGN_UNCODED: return transmit_uncoded(bytes, config.ebn0_db, rng);
        case ChannelMode::AWGN_LDPC: return transmit_ldpc(bytes, config.ebn0_db, rng);
    }
    throw InvariantViolation("unhandled channel mode");
}

std::function<std::vector<uint8_t>(const std::vector<uint8_t>&)> make_byte_channel(
    const ChannelConfig& config) {
    auto rng = std::make_shared<Rng>(config.seed, config.stream);
    return [config, rng](const std::vector<uint8_t>& bytes) {
        return transmit(bytes, config, *rng);
    };
}

BerPoint measure_ber(ChannelMode mode, double ebn0_db, uint64_t min_bits, uint64_t seed) {
    BerPoint point;
    point.ebn0_db = ebn0_db;
    point.mode = mode;
    Rng data_rng(seed, 1);
    Rng noise_rng(seed, 2);
    ChannelConfig config{mode, ebn0_db, seed, 0};
    constexpr size_t kChunkBytes = 4096;
    while (point.bits < min_bits) {
        std::vector<uint8_t> payload(kChunkBytes);
        for (auto& b : payload) b = uint8_t(data_rng.next_u64() & 0xFF);
        const auto received = transmit(payload, config, noise_rng);
        for (size_t i = 0; i < payload.size(); ++i) {
            uint8_t diff = payload[i] ^ received[i];
            while (diff) {
                point.errors += diff & 1;
                diff >>= 1;
            }
        }
        point.bits += payload.size() * 8;
    }
    point.ber = point.bits ? double(point.errors) / double(point.bits) : 0.0;
    return point;
}

}  // namespace semcom
