#pragma once

#include <json.hpp>

#include "ugift/eval.hpp"
#include "ugift/selftrain.hpp"

namespace ugift {

nlohmann::ordered_json metrics_to_json(const Metrics& m);

// Report document: baseline, rounds[], best_round, deltas. Per-round
// pseudo-label records are dumped separately as JSONL, not embedded here.
nlohmann::ordered_json report_to_json(const SelfTrainReport& report);

}  // namespace ugift
