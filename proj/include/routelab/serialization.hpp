#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "routelab/mdp.hpp"

namespace routelab {

/**
 * JSON document form of a TabularMdp:
 * {
 *   "num_states": N, "discount": beta, "terminals": [ids],
 *   "states": [ { "state": s, "actions": [
 *       { "action": a, "reward": r, "transitions": [[next, prob], ...] }, ...
 *   ]}, ... ]
 * }
 */
inline nlohmann::json mdp_to_json(const TabularMdp& mdp) {
    nlohmann::json doc;
    doc["num_states"] = mdp.num_states();
    doc["discount"] = mdp.discount();
    doc["terminals"] = mdp.terminal_states();
    nlohmann::json states = nlohmann::json::array();
    for (int s = 0; s < mdp.num_states(); ++s) {
        nlohmann::json actions = nlohmann::json::array();
        for (int a = 0; a < mdp.num_actions(s); ++a) {
            const ActionSpec& act = mdp.action(s, a);
            nlohmann::json transitions = nlohmann::json::array();
            for (const auto& tr : act.transitions)
                transitions.push_back({tr.next_state, tr.prob});
            actions.push_back({{"action", a}, {"reward", act.reward}, {"transitions", transitions}});
        }
        states.push_back({{"state", s}, {"actions", actions}});
    }
    doc["states"] = std::move(states);
    return doc;
}

inline TabularMdp mdp_from_json(const nlohmann::json& doc) {
    int n = doc.at("num_states").get<int>();
    double discount = doc.at("discount").get<double>();
    std::vector<int> terminals = doc.at("terminals").get<std::vector<int>>();
    std::vector<std::vector<ActionSpec>> actions(static_cast<size_t>(std::max(n, 0)));
    for (const auto& state_doc : doc.at("states")) {
        int s = state_doc.at("state").get<int>();
        if (s < 0 || s >= n) throw std::invalid_argument("mdp_from_json: state id out of range");
        auto& acts = actions[static_cast<size_t>(s)];
        for (const auto& action_doc : state_doc.at("actions")) {
            ActionSpec spec;
            spec.reward = action_doc.at("reward").get<double>();
            for (const auto& tr : action_doc.at("transitions"))
                spec.transitions.push_back(Transition{tr.at(0).get<int>(), tr.at(1).get<double>()});
            acts.push_back(std::move(spec));
        }
    }
    return TabularMdp(n, discount, std::move(actions), std::move(terminals));
}

inline void save_mdp(const std::string& path, const TabularMdp& mdp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mdp: cannot write " + path);
    out << mdp_to_json(mdp).dump(2) << '\n';
}

inline TabularMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mdp: cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return mdp_from_json(doc);
}

}  // namespace routelab
