#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qmcg {

// A Wiener functional together with its Malliavin derivative D_s^k, which for
// the functionals used here is constant on every monitoring interval
// [t_l, t_{l+1}). Arithmetic follows the product and quotient rules.
class MalliavinJet {
public:
    MalliavinJet() = default;
    MalliavinJet(double value, std::vector<double> derivative)
        : value_(value), derivative_(std::move(derivative)) {}

    static MalliavinJet constant(double value, std::size_t intervals) {
        return {value, std::vector<double>(intervals, 0.0)};
    }

    double value() const noexcept { return value_; }
    std::span<const double> derivative() const noexcept { return derivative_; }
    std::size_t intervals() const noexcept { return derivative_.size(); }

    // int_0^T D_s ds over the grid t_0 = 0 < ... < t_N = T.
    double time_integral(std::span<const double> grid) const {
        check_grid(grid);
        double sum = 0.0;
        for (std::size_t l = 0; l < derivative_.size(); ++l) {
            sum += derivative_[l] * (grid[l + 1] - grid[l]);
        }
        return sum;
    }

    // int_0^T s D_s ds.
    double s_weighted_integral(std::span<const double> grid) const {
        check_grid(grid);
        double sum = 0.0;
        for (std::size_t l = 0; l < derivative_.size(); ++l) {
            sum += derivative_[l] * 0.5 * (grid[l + 1] * grid[l + 1] - grid[l] * grid[l]);
        }
        return sum;
    }

    friend MalliavinJet operator+(const MalliavinJet& f, const MalliavinJet& g) {
        return combine(f, g, f.value_ + g.value_, 1.0, 1.0);
    }
    friend MalliavinJet operator-(const MalliavinJet& f, const MalliavinJet& g) {
        return combine(f, g, f.value_ - g.value_, 1.0, -1.0);
    }
    friend MalliavinJet operator*(const MalliavinJet& f, const MalliavinJet& g) {
        // D(fg) = g Df + f Dg
        return combine(f, g, f.value_ * g.value_, g.value_, f.value_);
    }
    friend MalliavinJet operator/(const MalliavinJet& f, const MalliavinJet& g) {
        // D(f/g) = Df / g - f Dg / g^2
        const double q = f.value_ / g.value_;
        return combine(f, g, q, 1.0 / g.value_, -q / g.value_);
    }
    friend MalliavinJet operator*(double c, const MalliavinJet& f) {
        MalliavinJet out = f;
        out.value_ *= c;
        for (double& d : out.derivative_) d *= c;
        return out;
    }

private:
    static MalliavinJet combine(const MalliavinJet& f, const MalliavinJet& g, double value,
                                double cf, double cg) {
        if (f.intervals() != g.intervals()) {
            throw std::invalid_argument("MalliavinJet: interval counts differ");
        }
        std::vector<double> d(f.intervals());
        for (std::size_t l = 0; l < d.size(); ++l) {
            d[l] = cf * f.derivative_[l] + cg * g.derivative_[l];
        }
        return {value, std::move(d)};
    }

    void check_grid(std::span<const double> grid) const {
        if (grid.size() != derivative_.size() + 1) {
            throw std::invalid_argument("MalliavinJet: grid needs intervals + 1 points");
        }
    }

    double value_ = 0.0;
    std::vector<double> derivative_;
};

} // namespace qmcg
