#include "gridmdp/model.hpp"

#include <sstream>

namespace gridmdp {

SystemModel make_model(UniformGrid state, UniformGrid input, UniformGrid disturbance,
                       std::vector<Expr> dynamics, NoiseSpec noise) {
    SystemModel m;
    m.state = std::move(state);
    m.input = std::move(input);
    m.disturbance = std::move(disturbance);
    m.dynamics = std::move(dynamics);
    m.noise = std::move(noise);

    const int n = m.state.dim();
    if (n == 0) throw ConfigError("model: the state grid must have at least one dimension");
    if (static_cast<int>(m.dynamics.size()) != n) {
        std::ostringstream os;
        os << "model: " << m.dynamics.size() << " dynamics expressions for a " << n
           << "-dimensional state";
        throw ConfigError(os.str());
    }
    for (const Expr& e : m.dynamics) {
        if (e.dims().n != n || e.dims().m != m.input.dim() || e.dims().p != m.disturbance.dim())
            throw ConfigError("model: dynamics expression dimensions do not match the grids");
    }
    if (m.noise.dim() != n)
        throw ConfigError("model: noise dimension must equal the state dimension");
    return m;
}

Vector dynamics_image(const SystemModel& m, const Vector& x, const Vector& u, const Vector& w) {
    Vector mu(m.state_dim());
    for (int i = 0; i < m.state_dim(); ++i)
        mu[i] = eval(m.dynamics[static_cast<std::size_t>(i)], x.data(), u.data(), w.data());
    return mu;
}

} // namespace gridmdp
