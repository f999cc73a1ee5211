#include "slv/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace slv {

void Polynomial::normalize() {
    auto first = std::find_if(c_.begin(), c_.end(), [](double v) { return v != 0.0; });
    if (first == c_.end()) {
        c_.assign(1, 0.0);
        return;
    }
    c_.erase(c_.begin(), first);
}

Polynomial Polynomial::from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> acc{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(acc.size() + 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i] += acc[i];
            next[i + 1] -= r * acc[i];
        }
        acc = std::move(next);
    }
    std::vector<double> real(acc.size());
    std::transform(acc.begin(), acc.end(), real.begin(), [](const auto& v) { return v.real(); });
    return Polynomial(std::move(real));
}

double Polynomial::coeff(int power) const {
    const int idx = degree() - power;
    if (power < 0 || idx < 0) return 0.0;
    return c_[static_cast<std::size_t>(idx)];
}

double Polynomial::operator()(double s) const {
    double acc = 0.0;
    for (double v : c_) acc = acc * s + v;
    return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> s) const {
    std::complex<double> acc = 0.0;
    for (double v : c_) acc = acc * s + v;
    return acc;
}

Polynomial Polynomial::derivative() const {
    const int n = degree();
    if (n == 0) return Polynomial();
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = c_[static_cast<std::size_t>(i)] * (n - i);
    return Polynomial(std::move(d));
}

std::vector<std::complex<double>> Polynomial::roots() const {
    const int n = degree();
    if (n <= 0) return {};
    // Strip roots at the origin exactly; the companion matrix would only approximate them.
    int zeros_at_origin = 0;
    while (zeros_at_origin < n && c_[static_cast<std::size_t>(n - zeros_at_origin)] == 0.0) ++zeros_at_origin;
    const int m = n - zeros_at_origin;
    std::vector<std::complex<double>> out(static_cast<std::size_t>(zeros_at_origin), 0.0);
    if (m == 0) return out;
    if (m == 1) {
        out.emplace_back(-c_[1] / c_[0]);
        return out;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) companion(0, j) = -c_[static_cast<std::size_t>(j + 1)] / c_[0];
    for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    for (int i = 0; i < m; ++i) out.push_back(ev(i));
    return out;
}

bool Polynomial::is_hurwitz() const {
    const int n = degree();
    if (n == 0) return true;
    // Routh array, first column must keep the sign of the leading coefficient.
    std::vector<double> row0;
    std::vector<double> row1;
    for (int i = 0; i <= n; ++i) {
        (i % 2 == 0 ? row0 : row1).push_back(c_[static_cast<std::size_t>(i)]);
    }
    const double sign = c_[0] > 0.0 ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        if (row1.empty() || sign * row1[0] <= 0.0) return false;
        std::vector<double> next;
        for (std::size_t j = 0; j + 1 < row0.size(); ++j) {
            const double b = j + 1 < row1.size() ? row1[j + 1] : 0.0;
            next.push_back((row1[0] * row0[j + 1] - row0[0] * b) / row1[0]);
        }
        row0 = std::move(row1);
        row1 = std::move(next);
    }
    return true;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    const std::size_t n = std::max(c_.size(), other.c_.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) out[n - c_.size() + i] += c_[i];
    for (std::size_t i = 0; i < other.c_.size(); ++i) out[n - other.c_.size() + i] += other.c_[i];
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& other) const {
    std::vector<double> out(c_.size() + other.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) {
        for (std::size_t j = 0; j < other.c_.size(); ++j) out[i + j] += c_[i] * other.c_[j];
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator*(double k) const {
    std::vector<double> out(c_);
    for (double& v : out) v *= k;
    return Polynomial(std::move(out));
}

}  // namespace slv
