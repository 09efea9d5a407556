#include "pcam/report_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pcam/cloud_io.hpp"
#include "pcam/errors.hpp"

namespace pcam {

namespace {

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

json row_to_json(const metrics::MetricRow& row) {
  json j;
  j["label"] = row.label;
  j["class"] = row.class_name;
  j["m_is"] = row.m_is;
  j["fid"] = row.fid;
  j["cd"] = row.cd;
  j["emd"] = row.emd;
  j["pc_ams"] = row.pc_ams;
  j["degenerate_copy"] = row.degenerate_copy;
  j["generated_ids"] = row.generated_ids;
  j["reference_ids"] = row.reference_ids;
  return j;
}

}  // namespace

void save_metric_report_json(const std::string& path, const metrics::MetricReport& report) {
  json j;
  j["schema_version"] = 1;
  j["k_refs"] = report.k_refs;
  j["seed"] = report.seed;
  j["per_class"] = json::array();
  for (const auto& row : report.per_class) j["per_class"].push_back(row_to_json(row));
  j["aggregate"] = row_to_json(report.aggregate);
  write_text(path, j.dump(2) + "\n");
}

void save_metric_report_csv(const std::string& path, const metrics::MetricReport& report) {
  std::string text = "class,m_is,fid,cd,emd,pc_ams\n";
  char buf[256];
  auto add_row = [&](const metrics::MetricRow& row) {
    std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  row.class_name.empty() ? std::to_string(row.label).c_str() : row.class_name.c_str(), row.m_is,
                  row.fid, row.cd, row.emd, row.pc_ams);
    text += buf;
  };
  for (const auto& row : report.per_class) add_row(row);
  add_row(report.aggregate);
  write_text(path, text);
}

void save_diffusion_csv(const std::string& path, const metrics::DiffusionStudy& study) {
  std::string text = "distribution,parameter,fid,cd,emd,fid_ic,cd_ic,emd_ic\n";
  char buf[256];
  for (const auto& row : study.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", row.distribution.c_str(),
                  row.parameter, row.fid, row.cd, row.emd, row.fid_ic, row.cd_ic, row.emd_ic);
    text += buf;
  }
  write_text(path, text);
}

void save_train_log_jsonl(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& rec : log.batches) {
    json j;
    j["epoch"] = rec.epoch;
    j["batch"] = rec.batch;
    j["l_c"] = rec.l_c;
    if (rec.l_f1) j["l_f1"] = *rec.l_f1;
    if (rec.l_f2) j["l_f2"] = *rec.l_f2;
    if (rec.l_d) j["l_d"] = *rec.l_d;
    if (rec.l_df) j["l_df"] = *rec.l_df;
    j["side"] = rec.side == TrainedSide::Generator ? "generator" : "discriminator";
    j["d_noise_injected"] = rec.d_noise_injected;
    j["ae_noise_applied"] = rec.ae_noise_applied;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_am_result(const std::string& base_path, const AMResult& result) {
  save_cloud_ply(base_path + ".ply", result.cloud);
  json j;
  j["method"] = am_method_name(result.config.method);
  j["target_class"] = result.config.target_class;
  j["seed"] = result.config.seed;
  j["lr"] = result.config.lr;
  j["iterations"] = result.config.iterations;
  j["stuck_window"] = result.config.stuck_window;
  j["stuck_eps"] = result.config.stuck_eps;
  j["kick_sigma"] = result.config.kick_sigma;
  j["optimizer"] = result.config.optimizer == AMOptimizer::Adam ? "adam" : "sgd";
  j["init_descriptor"] = result.init_descriptor;
  j["init_jitter_sigma"] = result.config.init_jitter_sigma;
  j["initial_activation"] = result.initial_activation;
  j["final_activation"] = result.final_activation;
  j["kick_events"] = result.kick_events;
  j["activation_trace"] = result.activation_trace;
  write_text(base_path + ".json", j.dump(2) + "\n");
}

void save_training_history_csv(const std::string& path, const ClassifierTrainResult& result) {
  std::string text = "epoch,train_loss,train_accuracy,test_accuracy\n";
  char buf[160];
  for (const auto& es : result.history) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", es.epoch, es.train_loss, es.train_accuracy,
                  es.test_accuracy);
    text += buf;
  }
  write_text(path, text);
}

}  // namespace pcam
