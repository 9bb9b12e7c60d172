#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pessiq/mdp.hpp"

namespace pessiq {

// Structured text format for MDP instances:
//
// {
//   "num_states": S,
//   "num_actions": A,
//   "discount": gamma,
//   "reward": [S*A reals, row-major by state then action],
//   "transition": [S*A*S reals, row-major by state, action, next state]
// }
inline TabularMdp mdp_from_json(const nlohmann::json& j) {
    TabularMdp mdp;
    try {
        mdp.num_states = j.at("num_states").get<std::size_t>();
        mdp.num_actions = j.at("num_actions").get<std::size_t>();
        mdp.discount = j.at("discount").get<double>();
        const auto& rew = j.at("reward");
        const auto& tra = j.at("transition");
        if (!rew.is_array() || rew.size() != mdp.num_states * mdp.num_actions)
            throw std::invalid_argument("mdp: \"reward\" must be a flat array of S*A reals");
        if (!tra.is_array() || tra.size() != mdp.num_states * mdp.num_actions * mdp.num_states)
            throw std::invalid_argument("mdp: \"transition\" must be a flat array of S*A*S reals");
        mdp.reward = SaTable<double>(mdp.num_states, mdp.num_actions, 0.0);
        for (std::size_t i = 0; i < rew.size(); ++i) mdp.reward.flat()[i] = rew[i].get<double>();
        mdp.transition.resize(tra.size());
        for (std::size_t i = 0; i < tra.size(); ++i) mdp.transition[i] = tra[i].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("mdp: malformed document: ") + e.what());
    }
    validate(mdp);
    return mdp;
}

inline TabularMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open MDP file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // parse_error.what() carries line/byte position information
        throw std::invalid_argument(path + ": " + e.what());
    }
    try {
        return mdp_from_json(j);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline nlohmann::json mdp_to_json(const TabularMdp& mdp) {
    nlohmann::json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["discount"] = mdp.discount;
    j["reward"] = mdp.reward.flat();
    j["transition"] = mdp.transition;
    return j;
}

inline void save_mdp(const TabularMdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write MDP file: " + path);
    out << mdp_to_json(mdp).dump(2) << "\n";
}

}  // namespace pessiq
