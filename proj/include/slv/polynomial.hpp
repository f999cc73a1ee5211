#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

namespace slv {

/// Real polynomial in the Laplace variable, coefficients stored in descending powers.
///
/// Leading zeros are stripped on construction so that degree() == coefficients().size() - 1.
/// The zero polynomial is represented as {0}.
class Polynomial {
public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { normalize(); }
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { normalize(); }

    static Polynomial constant(double value) { return Polynomial({value}); }
    /// Monic polynomial with the given roots; complex roots must appear in conjugate pairs.
    static Polynomial from_roots(const std::vector<std::complex<double>>& roots);

    const std::vector<double>& coefficients() const noexcept { return c_; }
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    double leading() const noexcept { return c_.front(); }
    /// Coefficient of s^power (0 when power exceeds the degree).
    double coeff(int power) const;
    bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }

    double operator()(double s) const;
    std::complex<double> operator()(std::complex<double> s) const;

    Polynomial derivative() const;
    /// Roots via the eigenvalues of the companion matrix.
    std::vector<std::complex<double>> roots() const;
    /// True when every root has a strictly negative real part (Routh array test).
    bool is_hurwitz() const;

    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;
    Polynomial operator*(double k) const;
    Polynomial operator-() const { return *this * -1.0; }

    bool operator==(const Polynomial& other) const = default;

private:
    void normalize();
    std::vector<double> c_;
};

inline Polynomial operator*(double k, const Polynomial& p) { return p * k; }

}  // namespace slv
