#pragma once

// Binary LDPC codes: parity-check matrices built by progressive edge growth
// or loaded from alist files, a Gaussian-elimination systematic encoder, and
// a sum-product belief propagation decoder.

#include <cstdint>
#include <string>
#include <vector>

#include "semcom/errors.hpp"

namespace semcom {

struct LdpcCode {
    int n = 0;  // codeword bits
    int m = 0;  // parity checks
    int k = 0;  // info bits = n - m for a full-rank H
    std::vector<std::vector<int>> row_cols;  // check -> variable indices
    std::vector<std::vector<int>> col_rows;  // variable -> check indices

    // Encoder derived from the reduced row echelon form of H: info bits sit
    // in the free columns, each pivot column is a parity over free columns.
    std::vector<int> free_cols;               // size k, ascending
    std::vector<int> pivot_cols;              // size m, one per reduced row
    std::vector<std::vector<int>> row_frees;  // reduced row -> free columns in it
};

// Regular code with column weight wc and row weight wr; retries construction
// with derived seeds until the graph completes and H has full rank. The
// shipped transport code is peg_construct(1024, 3, 6, kLdpcSeed).
constexpr uint64_t kLdpcSeed = 0x5ec0de;
LdpcCode peg_construct(int n, int wc, int wr, uint64_t seed);

// Builds a code from explicit check rows (variable index lists).
LdpcCode code_from_rows(int n, std::vector<std::vector<int>> row_cols);

LdpcCode load_alist(const std::string& path);
void save_alist(const LdpcCode& code, const std::string& path);

// info has exactly code.k bits (0/1 bytes); returns n codeword bits.
std::vector<uint8_t> ldpc_encode(const std::vector<uint8_t>& info, const LdpcCode& code);

struct LdpcDecodeResult {
    std::vector<uint8_t> info;
    bool converged = false;
    int iterations = 0;
};

// Sum-product decoding of n channel LLRs (positive = bit 0); stops early when
// the syndrome clears.
LdpcDecodeResult ldpc_decode(const std::vector<double>& llrs, const LdpcCode& code,
                             int max_iters = 50);

}  // namespace semcom
