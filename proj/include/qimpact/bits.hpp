#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qimpact {

/// Packed vector of single-shot outcomes.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t n) : size_(n), words_((n + 63) / 64, 0) {}

    /// Adopts packed words (bit i lives in words[i / 64] at position i % 64).
    static BitVector from_words(std::vector<std::uint64_t> words, std::size_t n) {
        BitVector b;
        words.resize((n + 63) / 64, 0);
        if (n & 63) words.back() &= (std::uint64_t{1} << (n & 63)) - 1;
        b.size_ = n;
        b.words_ = std::move(words);
        return b;
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool operator[](std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

    void set(std::size_t i, bool v) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void push_back(bool v) {
        if ((size_ & 63) == 0) words_.push_back(0);
        ++size_;
        set(size_ - 1, v);
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

    friend bool operator==(const BitVector&, const BitVector&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace qimpact
