#include "ddi/truss_model.hpp"

namespace ddi {

TrussMesh generate_lattice_truss(const LatticeSpec& spec) {
    if (spec.bays_x < 1 || spec.bays_y < 1 || spec.levels < 1) {
        throw ContractViolation("lattice needs at least one bay in every direction");
    }
    if (!(spec.spacing > 0.0) || !(spec.area > 0.0)) {
        throw ContractViolation("lattice spacing and area must be positive");
    }
    if (spec.tip_direction < 0 || spec.tip_direction > 2) throw ContractViolation("bad tip load direction");

    const int nx = spec.bays_x + 1, ny = spec.bays_y + 1, nz = spec.levels + 1;
    auto id = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

    TrussMesh mesh;
    mesh.nodes.reserve(static_cast<std::size_t>(nx * ny * nz));
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) mesh.nodes.emplace_back(i * spec.spacing, j * spec.spacing, k * spec.spacing);

    auto bar = [&](int a, int b) { mesh.bars.push_back({a, b, spec.area}); };

    // cell edges
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (i + 1 < nx) bar(id(i, j, k), id(i + 1, j, k));
                if (j + 1 < ny) bar(id(i, j, k), id(i, j + 1, k));
                if (k + 1 < nz) bar(id(i, j, k), id(i, j, k + 1));
            }

    // one diagonal per face, orientation alternating with cell parity
    if (spec.face_diagonals) {
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i + 1 < nx; ++i) {
                    if ((i + j + k) % 2 == 0) bar(id(i, j, k), id(i + 1, j + 1, k));
                    else bar(id(i + 1, j, k), id(i, j + 1, k));
                }
        for (int k = 0; k + 1 < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i + 1 < nx; ++i) {
                    if ((i + j + k) % 2 == 0) bar(id(i, j, k), id(i + 1, j, k + 1));
                    else bar(id(i + 1, j, k), id(i, j, k + 1));
                }
        for (int k = 0; k + 1 < nz; ++k)
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    if ((i + j + k) % 2 == 0) bar(id(i, j, k), id(i, j + 1, k + 1));
                    else bar(id(i, j + 1, k), id(i, j, k + 1));
                }
    }
    if (spec.body_diagonals) {
        for (int k = 0; k + 1 < nz; ++k)
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i + 1 < nx; ++i) bar(id(i, j, k), id(i + 1, j + 1, k + 1));
    }

    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int d = 0; d < 3; ++d) mesh.supports.push_back({id(0, j, k), d});

    if (spec.tip_load != 0.0) {
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) mesh.loads.push_back({id(nx - 1, j, k), spec.tip_direction, spec.tip_load});
    }
    return mesh;
}

}  // namespace ddi
