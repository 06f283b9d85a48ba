#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nag {

// Square binary matrix with packed row-major storage; row = attending token,
// column = attended token.
class BitMatrix {
public:
    BitMatrix() = default;

    explicit BitMatrix(int n)
        : n_(n),
          words_per_row_((static_cast<std::size_t>(n) + 63) / 64),
          words_(static_cast<std::size_t>(n) * words_per_row_, 0) {}

    int size() const { return n_; }

    bool get(int i, int j) const {
        return (word(i, j) >> (static_cast<unsigned>(j) & 63)) & 1ULL;
    }

    void set(int i, int j) { word(i, j) |= 1ULL << (static_cast<unsigned>(j) & 63); }

    void or_with(const BitMatrix& other) {
        if (other.n_ != n_) {
            throw std::invalid_argument("bit matrix size mismatch");
        }
        for (std::size_t w = 0; w < words_.size(); ++w) {
            words_[w] |= other.words_[w];
        }
    }

    bool row_any(int i) const {
        const std::uint64_t* row = &words_[static_cast<std::size_t>(i) * words_per_row_];
        for (std::size_t w = 0; w < words_per_row_; ++w) {
            if (row[w] != 0) {
                return true;
            }
        }
        return false;
    }

    int row_count(int i) const {
        const std::uint64_t* row = &words_[static_cast<std::size_t>(i) * words_per_row_];
        int count = 0;
        for (std::size_t w = 0; w < words_per_row_; ++w) {
            count += __builtin_popcountll(row[w]);
        }
        return count;
    }

    // True when every set bit of other is also set here.
    bool contains(const BitMatrix& other) const {
        if (other.n_ != n_) {
            return false;
        }
        for (std::size_t w = 0; w < words_.size(); ++w) {
            if ((other.words_[w] & ~words_[w]) != 0) {
                return false;
            }
        }
        return true;
    }

    bool operator==(const BitMatrix& other) const {
        return n_ == other.n_ && words_ == other.words_;
    }

private:
    std::uint64_t& word(int i, int j) {
        return words_[static_cast<std::size_t>(i) * words_per_row_ +
                      (static_cast<std::size_t>(j) >> 6)];
    }
    const std::uint64_t& word(int i, int j) const {
        return words_[static_cast<std::size_t>(i) * words_per_row_ +
                      (static_cast<std::size_t>(j) >> 6)];
    }

    int n_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace nag
