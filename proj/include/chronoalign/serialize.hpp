// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "chronoalign/env.hpp"
#include "chronoalign/policy.hpp"

namespace chronoalign {

std::string observation_name(Observation obs);
Observation observation_from_name(const std::string& name);

nlohmann::json move_to_json(const Move& move);
nlohmann::json log_entry_to_json(const LogEntry& entry);
LogEntry log_entry_from_json(const nlohmann::json& j);

/// One JSONL line: keys k, action_id, t_true, t_confirm, n_check,
/// total_sleep_s, moves.
nlohmann::json record_to_json(const EpisodeRecord& record);
EpisodeRecord record_from_json(const nlohmann::json& j);

nlohmann::json aborted_to_json(const AbortedEpisode& aborted);

// Policy-visible structures.
nlohmann::json summary_to_json(const HistorySummary& summary);
nlohmann::json trace_to_json(const EpisodeTrace& trace);
nlohmann::json context_to_json(const PolicyContext& ctx);

/// Every key that may appear anywhere in a serialized PolicyContext,
/// HistorySummary, EpisodeTrace or observation.
const std::set<std::string>& policy_visible_keys();

/// Audits a serialized policy-visible value against one hidden completion
/// time. Returns a description of the first leak found: a key outside
/// policy_visible_keys(), a key mentioning t_true, a number equal to
/// t_true, or a string containing its rendering.
std::optional<std::string> audit_information_barrier(const nlohmann::json& visible, double t_true);

/// Serializer hook used by the self-test so a tampered serializer can be
/// injected and caught.
using ContextSerializer = std::function<nlohmann::json(const PolicyContext&)>;

}  // namespace chronoalign
