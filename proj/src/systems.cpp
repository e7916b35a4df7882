#include "lyap/systems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lyap {

void StateBox::validate() const {
    if (lower.empty()) {
        throw std::invalid_argument("StateBox: dimension must be >= 1");
    }
    if (lower.size() != upper.size() || lower.size() != wrap.size()) {
        throw std::invalid_argument("StateBox: lower/upper/wrap sizes differ");
    }
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (!(lower[d] < upper[d])) {
            throw std::invalid_argument("StateBox: lower must be < upper in every dimension");
        }
    }
}

Vec StateBox::fold(Vec x) const {
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (!wrap[d]) continue;
        const double w = upper[d] - lower[d];
        double t = std::fmod(x[d] - lower[d], w);
        if (t < 0.0) t += w;
        if (t >= w) t = 0.0;
        x[d] = lower[d] + t;
    }
    return x;
}

bool StateBox::contains(const Vec& x) const {
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (wrap[d]) continue;
        if (x[d] < lower[d] || x[d] >= upper[d]) return false;
    }
    return true;
}

SystemDef standard_map(StandardMapParams params) {
    if (!std::isfinite(params.K)) {
        throw std::invalid_argument("standard_map: K must be finite");
    }
    SystemDef sys;
    sys.dimension = 2;
    sys.control_dimension = 1;
    sys.state_box = StateBox{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
    sys.name = "standard_map";
    const double K = params.K;
    sys.map = [K](const Vec& x, const Vec& u) {
        const double kick = K * u[0] * std::sin(2.0 * std::numbers::pi * x[0]);
        return Vec{x[0] + x[1] + kick, x[1] + kick};
    };
    return sys;
}

SystemDef identity_system(StateBox box) {
    box.validate();
    SystemDef sys;
    sys.dimension = box.dimension();
    sys.control_dimension = 1;
    sys.state_box = std::move(box);
    sys.name = "identity";
    sys.map = [](const Vec& x, const Vec&) { return x; };
    return sys;
}

SystemDef shift_system(StateBox box) {
    box.validate();
    SystemDef sys;
    sys.dimension = box.dimension();
    sys.control_dimension = sys.dimension;
    sys.state_box = std::move(box);
    sys.name = "shift";
    sys.map = [](const Vec& x, const Vec& u) {
        Vec y(x.size());
        for (std::size_t d = 0; d < x.size(); ++d) y[d] = x[d] + u[d];
        return y;
    };
    return sys;
}

Vec evaluate(const SystemDef& system, const Vec& x, const Vec& u) {
    if (int(x.size()) != system.dimension) {
        throw std::invalid_argument("evaluate: state dimension mismatch");
    }
    if (int(u.size()) != system.control_dimension) {
        throw std::invalid_argument("evaluate: control dimension mismatch");
    }
    const Vec xf = system.state_box.fold(x);
    if (!system.state_box.contains(xf)) {
        throw std::domain_error("evaluate: state outside box on a non-wrapped dimension");
    }
    return system.state_box.fold(system.map(xf, u));
}

ExplicitSystem explicit_matrix_system(std::vector<CsrMatrix> matrices,
                                      std::vector<Vec> control_labels) {
    if (matrices.empty()) {
        throw std::invalid_argument("explicit_matrix_system: need at least one matrix");
    }
    const int n = matrices.front().rows;
    for (std::size_t a = 0; a < matrices.size(); ++a) {
        const CsrMatrix& m = matrices[a];
        if (m.rows != n || m.cols != n) {
            std::ostringstream ss;
            ss << "explicit_matrix_system: matrix " << a + 1 << " is " << m.rows << "x" << m.cols
               << ", expected " << n << "x" << n;
            throw std::invalid_argument(ss.str());
        }
        for (double v : m.vals) {
            if (v < 0.0) {
                throw std::invalid_argument("explicit_matrix_system: negative entry in matrix " +
                                            std::to_string(a + 1));
            }
        }
        for (int i = 0; i < n; ++i) {
            const double s = m.row_sum(i);
            if (std::abs(s - 1.0) > 1e-12) {
                std::ostringstream ss;
                ss << "explicit_matrix_system: matrix " << a + 1 << " row " << i + 1
                   << " sums to " << s << ", expected 1 within 1e-12";
                throw std::invalid_argument(ss.str());
            }
        }
    }
    if (control_labels.empty()) {
        for (std::size_t a = 0; a < matrices.size(); ++a) {
            control_labels.push_back(Vec{double(a + 1)});
        }
    }
    if (control_labels.size() != matrices.size()) {
        throw std::invalid_argument("explicit_matrix_system: one control label per matrix");
    }
    ExplicitSystem sys;
    sys.n_cells = n;
    sys.matrices = std::move(matrices);
    sys.control_labels = std::move(control_labels);
    return sys;
}

} // namespace lyap
