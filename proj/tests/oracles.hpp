// Independent reference computations used only by the tests.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

namespace oracle {

using cplx = std::complex<double>;

/// splitmix64; fixed seeds make every "random" case reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform(double a = 0, double b = 1) {
        return a + (b - a) * static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

private:
    std::uint64_t s_;
};

/// Periodic solution of u' = i f(t) - i lambda c(t) u by shooting: the map
/// u(0) -> u(2 pi) is affine, so one homogeneous and one particular run fix the
/// periodic start. Integration runs backward when the homogeneous flow grows.
class ShootingOracle {
public:
    using state = std::array<double, 4>;  // (Re u, Im u) for the particular run, (Re, Im) homogeneous

    ShootingOracle(double lambda, std::function<cplx(double)> c, std::function<cplx(double)> f, double tol = 1e-13)
        : lambda_(lambda), c_(std::move(c)), f_(std::move(f)), tol_(tol) {
        const double T = 2 * M_PI;
        // Re of -i lambda c0 decides growth; probe with the homogeneous run.
        const auto fwd = run(0, T, {0, 0, 1, 0});
        const cplx phi(fwd[2], fwd[3]);
        backward_ = std::abs(phi) > 1;
        if (!backward_) {
            const cplx p(fwd[0], fwd[1]);
            start_t_ = 0;
            start_ = p / (1.0 - phi);
        } else {
            const auto bwd = run(T, 0, {0, 0, 1, 0});
            const cplx psi(bwd[2], bwd[3]);
            const cplx q(bwd[0], bwd[1]);
            start_t_ = T;
            start_ = q / (1.0 - psi);
        }
    }

    cplx operator()(double t) const {
        t = std::fmod(t, 2 * M_PI);
        if (t < 0) t += 2 * M_PI;
        if (t == start_t_) return start_;
        const auto s = run(start_t_, t, {start_.real(), start_.imag(), 0, 0});
        return {s[0], s[1]};
    }

private:
    state run(double t0, double t1, state x) const {
        namespace odeint = boost::numeric::odeint;
        auto rhs = [this](const state& s, state& ds, double t) {
            const cplx I(0, 1);
            const cplx cu = c_(t);
            const cplx u(s[0], s[1]);
            const cplx h(s[2], s[3]);
            const cplx du = I * f_(t) - I * lambda_ * cu * u;
            const cplx dh = -I * lambda_ * cu * h;
            ds = {du.real(), du.imag(), dh.real(), dh.imag()};
        };
        auto stepper = odeint::make_controlled(tol_, tol_, odeint::runge_kutta_fehlberg78<state>());
        const double span = t1 - t0;
        double dt = span / 2000;
        odeint::integrate_adaptive(stepper, rhs, x, t0, t1, dt);
        return x;
    }

    double lambda_;
    std::function<cplx(double)> c_, f_;
    double tol_;
    bool backward_ = false;
    double start_t_ = 0;
    cplx start_{};
};

}  // namespace oracle
