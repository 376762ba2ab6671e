#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mtml/metrics.hpp"
#include "mtml/trainer.hpp"

namespace mtml {

nlohmann::json metrics_to_json(const MetricsReport& report);
nlohmann::json history_to_json(const RunHistory& history);

void write_json(const nlohmann::json& j, const std::string& path);

// iteration,epoch,total,softmax, then per-slice loss / standard-hinge / audit columns
void write_losses_csv(const RunHistory& history, std::size_t num_slices, const std::string& path);

// iteration,slice,triplet_index,d_ap,d_an,d_pn,tau,flagged
void write_audit_csv(const std::vector<TrainAuditRow>& rows, const std::string& path);

}  // namespace mtml
