#pragma once

#include <cstdint>
#include <vector>

#include "qn/quantizer.hpp"

namespace qn {

// Adaptive prefix-free integer code. Integers are partitioned into blocks
// L_b = T_b \ T_{b-1} with T_b = {-ceil((S^{b+1}-1)/(2(S-1)))+1, ...,
// floor((S^{b+1}-1)/(2(S-1)))}, so |L_b| = S^b and L_0 = {0}. An index in
// block b is sent as b information symbols (its rank in L_b, base S, digits
// mapped to 1..S, most significant first) followed by the terminator 0.
struct SymbolSeq {
    std::vector<int> symbols;  // values in [0,S]; exactly one 0, at the end
};

// Block boundaries: T_b = [lo_b, hi_b].
struct BlockBounds {
    long long lo;
    long long hi;
};

int block_of(QuantIndex ell, int S);
BlockBounds block_bounds(int b, int S);  // saturates at the int64 range

SymbolSeq encode_index(QuantIndex ell, int S);
QuantIndex decode_index(const SymbolSeq& seq, int S);

// bits = (#symbols) * log2(S+1); fractional bits are the faithful unit.
double bit_cost(const SymbolSeq& seq, int S);
double bit_cost_of_index(QuantIndex ell, int S);

// Streaming decoder over concatenated sequences.
class SymbolStreamDecoder {
public:
    explicit SymbolStreamDecoder(int S) : S_(S) {}
    // feed one symbol; returns true when an index completed (stored in *out)
    bool push(int symbol, QuantIndex* out);

private:
    int S_;
    std::vector<int> pending_;
};

// Wire format: each symbol packed as an unsigned ceil(log2(S+1))-bit integer,
// MSB-first within bytes; the stream of one vector is padded with 0 bits
// (terminator symbols) to a byte boundary.
int wire_bits_per_symbol(int S);
std::vector<std::uint8_t> pack_symbols(const std::vector<int>& symbols, int S);
// Unpacks full bytes; trailing pad decodes as terminator symbols.
std::vector<int> unpack_symbols(const std::vector<std::uint8_t>& bytes, int S);

} // namespace qn
