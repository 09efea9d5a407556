#include "pcam/review.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pcam/cloud_io.hpp"
#include "pcam/errors.hpp"

namespace pcam {

ReviewReport review_misclassifications(const ClassifierModel& model, const DatasetSplit& split) {
  if (split.test.empty()) throw ContractError("review: empty test split");
  ReviewReport report;
  report.test_size = static_cast<int>(split.test.size());
  int hits = 0;
  for (const auto& lc : split.test) {
    const auto fb = classifier_forward(model, lc.cloud);
    int pred = 0;
    for (int i = 1; i < fb.logits.size(); ++i)
      if (fb.logits[i] > fb.logits[pred]) pred = i;
    if (pred == lc.label) {
      ++hits;
      continue;
    }
    ReviewEntry e;
    e.instance_id = lc.instance_id;
    e.true_label = lc.label;
    e.predicted_label = pred;
    e.confidence = fb.probs[pred];
    report.entries.push_back(std::move(e));
  }
  report.accuracy = static_cast<double>(hits) / report.test_size;
  return report;
}

ReviewReport export_review_bundles(const ClassifierModel& model, const DatasetSplit& split,
                                   const std::map<int, PointCloud>& am_cloud_by_class,
                                   const std::string& out_dir) {
  ReviewReport report = review_misclassifications(model, split);

  for (const auto& e : report.entries)
    for (int label : {e.true_label, e.predicted_label})
      if (am_cloud_by_class.find(label) == am_cloud_by_class.end())
        throw ContractError("review: missing AM output for class " + std::to_string(label) +
                            (label < static_cast<int>(split.class_names.size())
                                 ? " (" + split.class_names[static_cast<std::size_t>(label)] + ")"
                                 : ""));

  std::filesystem::create_directories(out_dir);
  nlohmann::json jentries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    const std::string bundle = out_dir + "/review_" + e.instance_id;
    std::filesystem::create_directories(bundle);
    const LabeledCloud* instance = nullptr;
    for (const auto& lc : split.test)
      if (lc.instance_id == e.instance_id) instance = &lc;
    save_cloud_ply(bundle + "/instance.ply", instance->cloud);
    save_cloud_ply(bundle + "/am_true_class.ply", am_cloud_by_class.at(e.true_label));
    save_cloud_ply(bundle + "/am_predicted_class.ply", am_cloud_by_class.at(e.predicted_label));

    nlohmann::json je;
    je["instance_id"] = e.instance_id;
    je["true_label"] = e.true_label;
    je["predicted_label"] = e.predicted_label;
    je["confidence"] = e.confidence;
    jentries.push_back(je);
  }

  nlohmann::json j;
  j["schema_version"] = 1;
  j["test_size"] = report.test_size;
  j["accuracy"] = report.accuracy;
  j["misclassified"] = jentries;
  std::ofstream out(out_dir + "/report.json");
  if (!out) throw IoError("cannot open for writing: " + out_dir + "/report.json");
  out << j.dump(2) << "\n";
  return report;
}

}  // namespace pcam
