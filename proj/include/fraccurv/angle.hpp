#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "errors.hpp"
#include "vec2.hpp"

namespace fraccurv {

/// A rational number of full turns, kept reduced and in [0, 1).
class Turns {
public:
    constexpr Turns() = default;
    Turns(std::int64_t num, std::int64_t den) {
        if (den == 0) throw InputError("rational angle with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        num %= den;
        if (num < 0) num += den;
        const std::int64_t g = std::gcd(num, den);
        num_ = num / g;
        den_ = den / g;
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double radians() const noexcept {
        return kTwoPi * static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend Turns operator+(Turns a, Turns b) {
        const std::int64_t l = std::lcm(a.den_, b.den_);
        if (l > (std::int64_t{1} << 40)) throw InputError("rational angle denominator overflow");
        return Turns(a.num_ * (l / a.den_) + b.num_ * (l / b.den_), l);
    }
    friend Turns operator-(Turns a) { return Turns(-a.num_, a.den_); }
    friend bool operator==(Turns, Turns) = default;

    std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Rotation angle carrying an exactness tag. Exact angles are rational turns; inexact ones
/// are real radian values that the user has declared irrational.
class Angle {
public:
    Angle() = default;
    static Angle exact(Turns t) { Angle a; a.exact_ = true; a.turns_ = t; return a; }
    static Angle exact(std::int64_t num, std::int64_t den) { return exact(Turns(num, den)); }
    static Angle inexact(double radians) {
        Angle a;
        a.exact_ = false;
        a.radians_ = wrap_2pi(radians);
        return a;
    }

    bool is_exact() const noexcept { return exact_; }
    Turns turns() const noexcept { return turns_; }
    double radians() const noexcept { return exact_ ? turns_.radians() : radians_; }

    friend Angle operator+(const Angle& a, const Angle& b) {
        if (a.exact_ && b.exact_) return exact(a.turns_ + b.turns_);
        return inexact(a.radians() + b.radians());
    }
    friend Angle operator-(const Angle& a) {
        return a.exact_ ? exact(-a.turns_) : inexact(-a.radians_);
    }

    std::string str() const {
        return exact_ ? turns_.str() + " turn" : std::to_string(radians_) + " rad";
    }

private:
    bool exact_ = true;
    Turns turns_{};
    double radians_ = 0.0;
};

}  // namespace fraccurv
