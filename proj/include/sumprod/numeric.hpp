#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace sumprod {

// Library-wide tolerances.
inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kInequalitySlack = 1e-9;

// Neumaier variant of Kahan summation; robust when addends exceed the sum.
class KahanSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    KahanSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept
{
    KahanSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

// Floor division for signed integers (C++ '/' truncates toward zero).
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// floor(a / 2^shift) for signed a.
constexpr std::int64_t floor_shift(std::int64_t a, int shift) noexcept
{
    return shift == 0 ? a : floor_div(a, std::int64_t{1} << shift);
}

// -p log2 p with the 0 log 0 = 0 convention.
inline double entropy_term(double p) noexcept
{
    return p > 0.0 ? -p * std::log2(p) : 0.0;
}

inline std::int64_t cell_of(double x, int level) noexcept
{
    return static_cast<std::int64_t>(std::floor(std::ldexp(x, level)));
}

inline double cell_left(std::int64_t index, int level) noexcept
{
    return std::ldexp(static_cast<double>(index), -level);
}

inline double cell_centre(std::int64_t index, int level) noexcept
{
    return std::ldexp(static_cast<double>(index) + 0.5, -level);
}

} // namespace sumprod
