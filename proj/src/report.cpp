#include "pcs/report.hpp"

#include <json.hpp>

#include "pcs/critical.hpp"
#include "pcs/errors.hpp"

namespace pcs {

std::string render_report(const PanelDataset& panel, const GroupModel& model,
                          const std::vector<MethodResults>& results, double alpha,
                          double beta, double epsilon, std::uint64_t seed) {
  if (static_cast<int>(model.assignment.size()) != panel.n_units)
    throw DimensionMismatch("report requires an assignment for every unit");
  for (const auto& r : results) {
    if (static_cast<int>(r.cs.per_unit.size()) != panel.n_units ||
        static_cast<int>(r.pvals.per_unit.size()) != panel.n_units)
      throw DimensionMismatch("method results do not match the panel");
  }

  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  auto& meta = doc["metadata"];
  meta["alpha"] = alpha;
  meta["beta"] = beta;
  meta["epsilon"] = epsilon;
  meta["n_selected"] = nlohmann::ordered_json::object();
  for (const auto& r : results) meta["n_selected"][method_name(r.method)] = r.cs.n_selected;
  meta["seed"] = seed;

  doc["units"] = nlohmann::ordered_json::array();
  for (int i = 0; i < panel.n_units; ++i) {
    nlohmann::ordered_json u;
    u["label"] = panel.unit_labels[i];
    u["ghat"] = model.assignment[i] + 1;
    for (const auto& r : results) {
      std::vector<int> groups;
      for (int g : r.cs.per_unit[i].groups) groups.push_back(g + 1);
      u[std::string("cs_") + method_name(r.method)] = groups;
    }
    auto& pu = u["p_unit"];
    auto& pj = u["p_joint"];
    for (const auto& r : results) {
      pu[method_name(r.method)] = r.pvals.per_unit[i].unitwise_p;
      pj[method_name(r.method)] = r.pvals.per_unit[i].joint_p;
    }
    doc["units"].push_back(std::move(u));
  }
  return doc.dump(2) + "\n";
}

}  // namespace pcs
