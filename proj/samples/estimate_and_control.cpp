// Library walk-through: build a network in code, track it with the estimator, and compute
// the FPD gain for each remaining step of a short horizon.

#include <iostream>

#include "meshpredict/meshpredict.hpp"

using namespace meshpredict;

int main() {
    // a -> 2 -> b plus a direct a -> b link, three-slot schedule.
    RoutingTopology g;
    g.node_count = 3;
    g.edges = {Edge{0, 1}, Edge{1, 2}, Edge{0, 2}};
    g.sink = 2;
    Schedule schedule;
    schedule.slots = {{Edge{0, 1}}, {Edge{1, 2}}, {Edge{0, 2}}};
    MeshNetwork net(g, schedule, TimingConfig{3, 0, 3});

    LinkModel links;
    links.ge = GEParams{{0.05, 0.05, 0.05}, {0.02, 0.02, 0.2}};
    NetworkEstimator estimator(net, links);

    PlantParams plant;
    plant.A = Matrix::Constant(1, 1, 1.2);
    plant.B = Matrix::Constant(1, 1, 1.0);
    plant.Rw = plant.R0 = plant.Q1 = plant.Q2 = Matrix::Identity(1, 1);
    plant.Q0 = Matrix::Constant(1, 1, 5.0);
    plant.N = 4;
    plant.validate();

    const int observed[] = {1, 0, 0, 1};
    for (int k = 0; k < plant.N; ++k) {
        const auto prediction = estimator.predict(plant.N - k);
        const auto marginals = marginal_predictions(prediction);
        const auto fpd = fpd_gain(plant, k, prediction);
        std::cout << "k=" << k << " Pr(nu_k=1)=" << marginals[0] << " L_k=" << fpd.gain(0, 0) << "\n";
        estimator.observe(observed[k]);
    }
    return 0;
}
