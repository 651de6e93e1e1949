#include "qn/codec.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qn {

namespace {

constexpr long long kI64Max = std::numeric_limits<long long>::max();

// (S^(b+1)-1)/(2(S-1)) rounded down / up, saturating at the int64 range.
void tb_bounds(int b, int S, long long* lo, long long* hi) {
    // grow S^(b+1) in 128-bit and saturate
    __int128 pw = 1;
    bool sat = false;
    const __int128 cap = (__int128)2 * (S - 1) * kI64Max;
    for (int i = 0; i <= b; ++i) {
        pw *= S;
        if (pw - 1 > cap) {
            sat = true;
            break;
        }
    }
    if (sat) {
        *hi = kI64Max;
        *lo = -kI64Max;
        return;
    }
    __int128 num = pw - 1;
    __int128 den = 2 * (S - 1);
    __int128 h = num / den;                    // floor
    __int128 l = -((num + den - 1) / den) + 1; // -ceil + 1
    *hi = h > kI64Max ? kI64Max : (long long)h;
    *lo = l < -kI64Max ? -kI64Max : (long long)l;
}

} // namespace

BlockBounds block_bounds(int b, int S) {
    if (b < 0 || S < 2) throw std::invalid_argument("block_bounds: bad arguments");
    BlockBounds bb;
    tb_bounds(b, S, &bb.lo, &bb.hi);
    return bb;
}

int block_of(QuantIndex ell, int S) {
    if (S < 2) throw std::invalid_argument("block_of: S must be >= 2");
    for (int b = 0;; ++b) {
        long long lo, hi;
        tb_bounds(b, S, &lo, &hi);
        if (ell >= lo && ell <= hi) return b;
        if (lo == -kI64Max && hi == kI64Max)
            throw std::runtime_error("block_of: index out of range");
    }
}

SymbolSeq encode_index(QuantIndex ell, int S) {
    int b = block_of(ell, S);
    SymbolSeq seq;
    if (b == 0) {
        seq.symbols.push_back(0);
        return seq;
    }
    long long lo, hi, plo, phi;
    tb_bounds(b, S, &lo, &hi);
    tb_bounds(b - 1, S, &plo, &phi);
    // L_b = [lo, plo-1] u [phi+1, hi], enumerated ascending
    unsigned long long rank =
        ell < plo ? static_cast<unsigned long long>(ell - lo)
                  : static_cast<unsigned long long>(plo - lo) +
                        static_cast<unsigned long long>(ell - phi - 1);
    seq.symbols.resize(b + 1);
    seq.symbols[b] = 0;
    for (int pos = b - 1; pos >= 0; --pos) {
        seq.symbols[pos] = static_cast<int>(rank % S) + 1;
        rank /= S;
    }
    return seq;
}

QuantIndex decode_index(const SymbolSeq& seq, int S) {
    if (S < 2) throw std::invalid_argument("decode_index: S must be >= 2");
    if (seq.symbols.empty() || seq.symbols.back() != 0)
        throw std::invalid_argument("decode_index: missing terminator");
    int b = static_cast<int>(seq.symbols.size()) - 1;
    unsigned long long rank = 0;
    for (int pos = 0; pos < b; ++pos) {
        int s = seq.symbols[pos];
        if (s < 1 || s > S) throw std::invalid_argument("decode_index: symbol out of range");
        rank = rank * S + static_cast<unsigned long long>(s - 1);
    }
    if (b == 0) return 0;
    long long lo, hi, plo, phi;
    tb_bounds(b, S, &lo, &hi);
    tb_bounds(b - 1, S, &plo, &phi);
    unsigned long long neg_count = static_cast<unsigned long long>(plo - lo);
    if (rank < neg_count) return lo + static_cast<long long>(rank);
    return phi + 1 + static_cast<long long>(rank - neg_count);
}

double bit_cost(const SymbolSeq& seq, int S) {
    return static_cast<double>(seq.symbols.size()) * std::log2(static_cast<double>(S) + 1.0);
}

double bit_cost_of_index(QuantIndex ell, int S) {
    return (block_of(ell, S) + 1) * std::log2(static_cast<double>(S) + 1.0);
}

bool SymbolStreamDecoder::push(int symbol, QuantIndex* out) {
    if (symbol < 0 || symbol > S_) throw std::invalid_argument("stream decode: bad symbol");
    if (symbol != 0) {
        pending_.push_back(symbol);
        return false;
    }
    SymbolSeq seq;
    seq.symbols = pending_;
    seq.symbols.push_back(0);
    pending_.clear();
    *out = decode_index(seq, S_);
    return true;
}

int wire_bits_per_symbol(int S) {
    int bits = 1;
    while ((1 << bits) < S + 1) ++bits;
    return bits;
}

std::vector<std::uint8_t> pack_symbols(const std::vector<int>& symbols, int S) {
    int w = wire_bits_per_symbol(S);
    std::vector<std::uint8_t> out;
    int acc = 0, nbits = 0;
    for (int s : symbols) {
        if (s < 0 || s > S) throw std::invalid_argument("pack_symbols: symbol out of range");
        acc = (acc << w) | s;
        nbits += w;
        while (nbits >= 8) {
            out.push_back(static_cast<std::uint8_t>((acc >> (nbits - 8)) & 0xff));
            nbits -= 8;
        }
    }
    if (nbits > 0) out.push_back(static_cast<std::uint8_t>((acc << (8 - nbits)) & 0xff));
    return out;
}

std::vector<int> unpack_symbols(const std::vector<std::uint8_t>& bytes, int S) {
    int w = wire_bits_per_symbol(S);
    std::vector<int> out;
    int acc = 0, nbits = 0;
    for (std::uint8_t byte : bytes) {
        acc = (acc << 8) | byte;
        nbits += 8;
        while (nbits >= w) {
            int s = (acc >> (nbits - w)) & ((1 << w) - 1);
            nbits -= w;
            if (s > S) throw std::invalid_argument("unpack_symbols: symbol out of range");
            out.push_back(s);
        }
        acc &= (1 << nbits) - 1;
    }
    return out;
}

} // namespace qn
