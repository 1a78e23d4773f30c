#pragma once

// Digital transport simulation: QPSK over AWGN, optionally protected by the
// shipped rate-1/2 LDPC code. Byte vectors go in, byte vectors of the same
// length come out, with bit errors distributed by the configured Eb/N0.

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/ldpc.hpp"
#include "semcom/rng.hpp"

namespace semcom {

enum class ChannelMode { PERFECT, AWGN_UNCODED, AWGN_LDPC };

std::string to_string(ChannelMode mode);
ChannelMode parse_channel_mode(const std::string& name);

struct ChannelConfig {
    ChannelMode mode = ChannelMode::PERFECT;
    double ebn0_db = 4.0;
    uint64_t seed = 0;
    uint64_t stream = 0;  // distinct streams give independent noise per session
};

// MSB-first bit unpacking and packing; bits_to_bytes requires a multiple of 8.
std::vector<uint8_t> bytes_to_bits(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> bits_to_bytes(const std::vector<uint8_t>& bits);

// Gray-mapped QPSK, unit symbol energy. A bit pair (first, second) maps to
// I = +1/sqrt(2) when second is 0 and Q = +1/sqrt(2) when first is 0.
std::vector<std::complex<double>> qpsk_modulate(const std::vector<uint8_t>& bits);

struct QpskSoftBits {
    std::vector<double> llrs;       // positive favors bit 0
    std::vector<uint8_t> hard_bits;
};

// noise_variance is the total complex noise power N0 (both components).
QpskSoftBits qpsk_demodulate(const std::vector<std::complex<double>>& symbols,
                             double noise_variance);

// N0 for unit-energy symbols at the given Eb/N0, modulation order, and code
// rate; AWGN adds independent per-component noise of variance N0/2.
double channel_noise_variance(double ebn0_db, int bits_per_symbol, double code_rate);
void add_awgn(std::vector<std::complex<double>>& symbols, double noise_variance, Rng& rng);

// The transport code: (3,6)-regular, n=1024, built once from the fixed seed.
const LdpcCode& transport_code();

// One pass through the configured channel. PERFECT copies the input; the AWGN
// modes modulate, add noise, and demodulate, with AWGN_LDPC encoding 512-bit
// info blocks (zero-padded) and decoding from soft bits. Output length always
// equals input length.
std::vector<uint8_t> transmit(const std::vector<uint8_t>& bytes, const ChannelConfig& config,
                              Rng& rng);

// Stateful closure around transmit; noise advances across calls so repeated
// frames see fresh errors.
std::function<std::vector<uint8_t>(const std::vector<uint8_t>&)> make_byte_channel(
    const ChannelConfig& config);

struct BerPoint {
    double ebn0_db = 0.0;
    ChannelMode mode = ChannelMode::PERFECT;
    uint64_t bits = 0;
    uint64_t errors = 0;
    double ber = 0.0;
};

// Monte-Carlo bit error rate over at least min_bits random payload bits.
BerPoint measure_ber(ChannelMode mode, double ebn0_db, uint64_t min_bits, uint64_t seed);

}  // namespace semcom
