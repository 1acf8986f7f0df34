#pragma once

#include <functional>

#include "routelab/mdp.hpp"

namespace routelab {

/**
 * Linear-architecture feature maps: a state feature vector of fixed
 * dimension state_dim and a state-action feature vector of fixed dimension
 * action_dim, both finite everywhere.
 */
struct FeatureMap {
    int state_dim = 0;
    int action_dim = 0;
    std::function<Vec(int)> state_features;
    std::function<Vec(int, int)> state_action_features;
};

}  // namespace routelab
