#pragma once

#include <string>

#include <json.hpp>

#include "flatmu/construct.hpp"
#include "flatmu/network.hpp"
#include "flatmu/semantics.hpp"
#include "flatmu/syntax.hpp"

namespace flatmu {

using Json = nlohmann::ordered_json;

// {"states": n, "edges": [[i,j],...], "valuation": {"p": [i,...]}}
Json model_to_json(const KripkeModel& m);
KripkeModel model_from_json(const nlohmann::json& j);

// {"formula", "nodes": [{"id", "atom": [closure indices]}], "edges", "satF", "satP"}
Json network_to_json(const Network& n);
Network network_from_json(const nlohmann::json& j, const ConnectiveTable& table = {});

Json closure_to_json(const ClosureSet& sigma);
Json deferrals_to_json(const Network& n);
Json timeouts_to_json(const Network& n, const TimeoutTable& t);
Json defects_to_json(const Network& n, const std::vector<Defect>& defects);
Json violations_to_json(const std::vector<Violation>& v);
Json report_to_json(const ConstructionReport& r);

// Doubled border marks S_F, grey fill marks S_P; each node lists its
// unfinished foci.
std::string to_dot(const Network& n, const std::string& name = "network");

}  // namespace flatmu
