#pragma once

#include <vector>

#include "vortexlab/domain.hpp"

namespace vlab {

// Vector fields are stored with d + 1 components: the d tangential ones
// first, the normal one last.  phys_index maps a stored component to the
// physical slot 0 (x1), 1 (x2) or 2 (x3).
inline int phys_index(int c, int d) { return c < d ? c : 2; }

/// Conservative unknowns of the compressible system.
struct State {
    Field rho;
    std::vector<Field> m;
    double t = 0.0;

    State() = default;
    explicit State(const Grid& g) : rho(g), m(g.d + 1, Field(g)) {}
    const Grid& grid() const { return rho.grid; }
};

/// Velocity of the incompressible reference.
struct IncState {
    std::vector<Field> u;
    double t = 0.0;

    IncState() = default;
    explicit IncState(const Grid& g) : u(g.d + 1, Field(g)) {}
    const Grid& grid() const { return u.front().grid; }
};

/// u = m / rho, component by component.
std::vector<Field> velocity(const State& s);

} // namespace vlab
