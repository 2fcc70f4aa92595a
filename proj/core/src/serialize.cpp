#include "ugift/serialize.hpp"

#include "ugift/config.hpp"

namespace ugift {

using nlohmann::ordered_json;

ordered_json metrics_to_json(const Metrics& m) {
  ordered_json per_class = ordered_json::array();
  for (const auto& c : m.per_class) {
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}});
  }
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["f1"] = m.f1;
  j["f1_mode"] = f1_mode_name(m.f1_mode);
  j["macro_f1"] = m.macro_f1;
  j["per_class"] = per_class;
  j["confusion"] = m.confusion;
  return j;
}

ordered_json report_to_json(const SelfTrainReport& report) {
  ordered_json j;
  j["baseline"]["validation"] = metrics_to_json(report.baseline_validation);
  if (report.baseline_test) {
    j["baseline"]["test"] = metrics_to_json(*report.baseline_test);
  }
  j["rounds"] = ordered_json::array();
  for (const auto& r : report.rounds) {
    ordered_json rj;
    rj["round"] = r.round;
    rj["pool_size"] = r.pool_ids.size();
    rj["pool_ids"] = r.pool_ids;
    rj["selected_ids"] = r.selected_ids;
    rj["pseudo_histogram"] = r.pseudo_histogram;
    rj["mean_mutual_info_pool"] = r.mean_mutual_info_pool;
    rj["mean_mutual_info_selected"] = r.mean_mutual_info_selected;
    rj["validation"] = metrics_to_json(r.validation);
    j["rounds"].push_back(std::move(rj));
  }
  j["best_round"] = report.best_round;
  j["best"]["validation"] = metrics_to_json(report.best_validation);
  if (report.best_test) {
    j["best"]["test"] = metrics_to_json(*report.best_test);
  }
  j["delta"] = {{"acc", report.delta_acc}, {"f1", report.delta_f1}};
  if (!report.best_checkpoint.empty()) {
    j["best_checkpoint"] = report.best_checkpoint;
  }
  return j;
}

}  // namespace ugift
