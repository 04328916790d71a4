#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace risklab {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic RNG used everywhere a seed appears in a contract.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// standard distributions and std::shuffle are not, so bounded draws and
/// shuffles are implemented here. Same seed, same sequence, on every
/// platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Unbiased draw in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Fisher-Yates, portable (unlike std::shuffle).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

/// Millisecond clock behind a virtual interface so run records can carry
/// deterministic timestamps under the mock backend.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() const override;
};

/// Always reports the same instant. Used whenever byte-identical outputs
/// are part of the contract (mock-backed runs, golden tests).
class FixedClock final : public Clock {
public:
    explicit FixedClock(std::int64_t ms = 0) : ms_(ms) {}
    std::int64_t now_ms() const override { return ms_; }

private:
    std::int64_t ms_;
};

// ISO-8601 UTC, second resolution ("1970-01-01T00:00:00Z").
std::string iso8601_utc(std::int64_t unix_ms);

std::string trim(const std::string& s);
std::string lower_ascii(std::string s);
bool contains(const std::string& haystack, const std::string& needle);
std::vector<std::string> split(const std::string& s, char sep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace risklab
