#pragma once

// Arbitrary-precision real and complex scalars on top of MPFR.
//
// A Real owns its mpfr_t and carries its own precision; binary operations
// produce a result at the larger of the two operand precisions. Nothing here
// reads or writes an ambient default precision: every value is created either
// from another value or through a PrecisionContext.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "eilab/error.hpp"

namespace eilab {

class Real {
public:
    explicit Real(mpfr_prec_t bits) {
        mpfr_init2(v_, bits);
        mpfr_set_zero(v_, 1);
    }

    Real(long value, mpfr_prec_t bits) {
        mpfr_init2(v_, bits);
        mpfr_set_si(v_, value, MPFR_RNDN);
    }

    static Real from_double(double value, mpfr_prec_t bits) {
        Real r(bits);
        mpfr_set_d(r.v_, value, MPFR_RNDN);
        return r;
    }

    /// Parses a decimal string ("0.02", "-1.5e-3"); the whole string must be consumed.
    static Real parse(std::string_view text, mpfr_prec_t bits) {
        Real r(bits);
        std::string s(text);
        auto first = s.find_first_not_of(" \t");
        auto last = s.find_last_not_of(" \t");
        if (first == std::string::npos) fail(ErrorKind::InvalidArgument, "empty numeric literal");
        s = s.substr(first, last - first + 1);
        char* end = nullptr;
        mpfr_strtofr(r.v_, s.c_str(), &end, 10, MPFR_RNDN);
        if (end == s.c_str() || *end != '\0') {
            fail(ErrorKind::InvalidArgument, "not a decimal number: '" + s + "'");
        }
        if (!mpfr_number_p(r.v_)) fail(ErrorKind::InvalidArgument, "non-finite literal: '" + s + "'");
        return r;
    }

    Real(const Real& other) {
        mpfr_init2(v_, mpfr_get_prec(other.v_));
        mpfr_set(v_, other.v_, MPFR_RNDN);
    }

    Real(Real&& other) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, other.v_);
    }

    Real& operator=(const Real& other) {
        if (this != &other) {
            mpfr_set_prec(v_, mpfr_get_prec(other.v_));
            mpfr_set(v_, other.v_, MPFR_RNDN);
        }
        return *this;
    }

    Real& operator=(Real&& other) noexcept {
        mpfr_swap(v_, other.v_);
        return *this;
    }

    ~Real() { mpfr_clear(v_); }

    [[nodiscard]] mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
    [[nodiscard]] mpfr_srcptr get() const { return v_; }
    [[nodiscard]] mpfr_ptr get() { return v_; }

    [[nodiscard]] int sign() const { return mpfr_sgn(v_); }
    [[nodiscard]] bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    [[nodiscard]] bool is_finite() const { return mpfr_number_p(v_) != 0; }
    [[nodiscard]] double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

    /// ln|x| as a double, valid far outside the double exponent range.
    [[nodiscard]] double log_abs() const {
        if (mpfr_zero_p(v_)) return -HUGE_VAL;
        long e = 0;
        double m = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
        return std::log(std::fabs(m)) + static_cast<double>(e) * 0.69314718055994530942;
    }

    /// Scientific notation with `significant` significant digits.
    [[nodiscard]] std::string to_decimal(int significant) const {
        char* buf = nullptr;
        mpfr_asprintf(&buf, "%.*Re", std::max(significant - 1, 0), v_);
        std::string out(buf);
        mpfr_free_str(buf);
        return out;
    }

    /// Same value rounded to `bits`.
    [[nodiscard]] Real rounded(mpfr_prec_t bits) const {
        Real r(bits);
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }

    Real operator-() const {
        Real r(precision());
        mpfr_neg(r.v_, v_, MPFR_RNDN);
        return r;
    }

    Real& operator+=(const Real& o) { mpfr_add(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator-=(const Real& o) { mpfr_sub(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(const Real& o) { mpfr_mul(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator/=(const Real& o) { mpfr_div(v_, v_, o.v_, MPFR_RNDN); return *this; }
    Real& operator*=(long n) { mpfr_mul_si(v_, v_, n, MPFR_RNDN); return *this; }
    Real& operator/=(long n) { mpfr_div_si(v_, v_, n, MPFR_RNDN); return *this; }

private:
    mpfr_t v_;
};

namespace detail {

using MpfrBinary = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
using MpfrUnary = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);

inline Real apply(MpfrBinary op, const Real& a, const Real& b) {
    Real r(std::max(a.precision(), b.precision()));
    op(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
}

inline Real apply(MpfrUnary op, const Real& a) {
    Real r(a.precision());
    op(r.get(), a.get(), MPFR_RNDN);
    return r;
}

}  // namespace detail

inline Real operator+(const Real& a, const Real& b) { return detail::apply(mpfr_add, a, b); }
inline Real operator-(const Real& a, const Real& b) { return detail::apply(mpfr_sub, a, b); }
inline Real operator*(const Real& a, const Real& b) { return detail::apply(mpfr_mul, a, b); }
inline Real operator/(const Real& a, const Real& b) { return detail::apply(mpfr_div, a, b); }

inline Real operator+(const Real& a, long n) { Real r(a.precision()); mpfr_add_si(r.get(), a.get(), n, MPFR_RNDN); return r; }
inline Real operator+(long n, const Real& a) { return a + n; }
inline Real operator-(const Real& a, long n) { Real r(a.precision()); mpfr_sub_si(r.get(), a.get(), n, MPFR_RNDN); return r; }
inline Real operator-(long n, const Real& a) { Real r(a.precision()); mpfr_si_sub(r.get(), n, a.get(), MPFR_RNDN); return r; }
inline Real operator*(const Real& a, long n) { Real r(a.precision()); mpfr_mul_si(r.get(), a.get(), n, MPFR_RNDN); return r; }
inline Real operator*(long n, const Real& a) { return a * n; }
inline Real operator/(const Real& a, long n) { Real r(a.precision()); mpfr_div_si(r.get(), a.get(), n, MPFR_RNDN); return r; }
inline Real operator/(long n, const Real& a) { Real r(a.precision()); mpfr_si_div(r.get(), n, a.get(), MPFR_RNDN); return r; }

inline bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.get(), b.get()) != 0; }
inline std::partial_ordering operator<=>(const Real& a, const Real& b) {
    if (mpfr_unordered_p(a.get(), b.get())) return std::partial_ordering::unordered;
    int c = mpfr_cmp(a.get(), b.get());
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}
inline bool operator==(const Real& a, long n) { return mpfr_cmp_si(a.get(), n) == 0; }
inline std::partial_ordering operator<=>(const Real& a, long n) {
    if (mpfr_nan_p(a.get())) return std::partial_ordering::unordered;
    int c = mpfr_cmp_si(a.get(), n);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

inline Real exp(const Real& x) { return detail::apply(mpfr_exp, x); }
inline Real expm1(const Real& x) { return detail::apply(mpfr_expm1, x); }
inline Real log(const Real& x) { return detail::apply(mpfr_log, x); }
inline Real log1p(const Real& x) { return detail::apply(mpfr_log1p, x); }
inline Real sqrt(const Real& x) { return detail::apply(mpfr_sqrt, x); }
inline Real abs(const Real& x) { return detail::apply(mpfr_abs, x); }
inline Real erfc(const Real& x) { return detail::apply(mpfr_erfc, x); }
inline Real cos(const Real& x) { return detail::apply(mpfr_cos, x); }
inline Real sin(const Real& x) { return detail::apply(mpfr_sin, x); }
inline Real atan(const Real& x) { return detail::apply(mpfr_atan, x); }
inline Real sinh(const Real& x) { return detail::apply(mpfr_sinh, x); }
inline Real cosh(const Real& x) { return detail::apply(mpfr_cosh, x); }
inline Real tgamma(const Real& x) { return detail::apply(mpfr_gamma, x); }
inline Real sqr(const Real& x) { return detail::apply(mpfr_sqr, x); }
inline Real pow(const Real& x, const Real& y) { return detail::apply(mpfr_pow, x, y); }
inline Real pow(const Real& x, long n) { Real r(x.precision()); mpfr_pow_si(r.get(), x.get(), n, MPFR_RNDN); return r; }
inline Real ldexp(const Real& x, long e) { Real r(x.precision()); mpfr_mul_2si(r.get(), x.get(), e, MPFR_RNDN); return r; }

inline const Real& max(const Real& a, const Real& b) { return (a < b) ? b : a; }
inline const Real& min(const Real& a, const Real& b) { return (b < a) ? b : a; }

inline Real const_pi(mpfr_prec_t bits) { Real r(bits); mpfr_const_pi(r.get(), MPFR_RNDN); return r; }
inline Real const_ln2(mpfr_prec_t bits) { Real r(bits); mpfr_const_log2(r.get(), MPFR_RNDN); return r; }

inline std::ostream& operator<<(std::ostream& os, const Real& x) { return os << x.to_decimal(30); }

/// |a - b| / max(|a|, |b|), and 0 when both vanish.
inline Real relative_difference(const Real& a, const Real& b) {
    Real scale = max(abs(a), abs(b));
    if (scale.is_zero()) return Real(a.precision());
    return abs(a - b) / scale;
}

// ---------------------------------------------------------------------------

struct Complex {
    Real re;
    Real im;

    explicit Complex(mpfr_prec_t bits) : re(bits), im(bits) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}

    /// e^{i theta}
    static Complex polar_unit(const Real& theta) { return {cos(theta), sin(theta)}; }

    [[nodiscard]] Complex conj() const { return {re, -im}; }
    [[nodiscard]] Real norm() const { return sqr(re) + sqr(im); }  // |z|^2
    [[nodiscard]] Real abs() const { return sqrt(norm()); }
    [[nodiscard]] bool is_zero() const { return re.is_zero() && im.is_zero(); }
};

inline Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
inline Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
inline Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
inline Complex operator*(const Complex& a, const Complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline Complex operator*(const Complex& a, const Real& s) { return {a.re * s, a.im * s}; }
inline Complex operator/(const Complex& a, const Complex& b) {
    Real d = b.norm();
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

// ---------------------------------------------------------------------------

/// Working precision passed explicitly to every numeric routine.
///
/// `digits` sets the MPFR mantissa (same convention as mpmath's dps);
/// `guard_digits` is the number of digits intermediate computation is allowed
/// to lose, so results are trusted to roughly digits - guard_digits.
class PrecisionContext {
public:
    static constexpr int kMinDigits = 50;

    explicit PrecisionContext(int digits = 300, int guard_digits = 20)
        : digits_(digits), guard_digits_(guard_digits) {
        if (digits < kMinDigits) {
            fail(ErrorKind::InvalidArgument,
                 "precision must be at least " + std::to_string(kMinDigits) + " digits, got " +
                     std::to_string(digits));
        }
        if (guard_digits <= 0 || 2 * guard_digits >= digits) {
            fail(ErrorKind::InvalidArgument, "guard digits must lie in (0, digits/2)");
        }
        bits_ = static_cast<mpfr_prec_t>(std::lround((digits + 1) * 3.3219280948873626));
    }

    [[nodiscard]] int digits() const { return digits_; }
    [[nodiscard]] int guard_digits() const { return guard_digits_; }
    [[nodiscard]] mpfr_prec_t bits() const { return bits_; }

    [[nodiscard]] Real zero() const { return Real(bits_); }
    [[nodiscard]] Real from(long value) const { return Real(value, bits_); }
    [[nodiscard]] Real from_double(double value) const { return Real::from_double(value, bits_); }
    [[nodiscard]] Real parse(std::string_view text) const { return Real::parse(text, bits_); }
    [[nodiscard]] Real pi() const { return const_pi(bits_); }

    /// 10^exponent, exact for integer exponents up to rounding of the power.
    [[nodiscard]] Real pow10(long exponent) const { return pow(from(10), exponent); }

    /// 10^(-n) for tolerances written as "10^(-digits/4)" etc.
    [[nodiscard]] Real tolerance(long n) const { return pow10(-n); }

    /// Tolerance residual of a well-conditioned computation: 10^(-(digits - guard)).
    [[nodiscard]] Real working_tolerance() const { return tolerance(digits_ - guard_digits_); }

    /// ln(10) * (digits + guard): log-magnitude below which contributions are negligible.
    [[nodiscard]] double negligible_log() const { return 2.302585092994046 * (digits_ + guard_digits_); }

    friend bool operator==(const PrecisionContext&, const PrecisionContext&) = default;

private:
    int digits_;
    int guard_digits_;
    mpfr_prec_t bits_;
};

}  // namespace eilab
