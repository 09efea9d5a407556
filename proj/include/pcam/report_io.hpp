#pragma once

#include <string>

#include "pcam/am.hpp"
#include "pcam/generators.hpp"
#include "pcam/metrics.hpp"
#include "pcam/pointnet.hpp"

namespace pcam {

void save_metric_report_json(const std::string& path, const metrics::MetricReport& report);

/// One row per class plus the aggregate: class,m_is,fid,cd,emd,pc_ams.
void save_metric_report_csv(const std::string& path, const metrics::MetricReport& report);

/// Columns distribution,parameter,fid,cd,emd,fid_ic,cd_ic,emd_ic.
void save_diffusion_csv(const std::string& path, const metrics::DiffusionStudy& study);

/// Line-delimited JSON, one record per batch.
void save_train_log_jsonl(const std::string& path, const TrainLog& log);

/// Cloud as PLY plus a JSON sidecar (trace, kick events, config echo) with
/// the same basename.
void save_am_result(const std::string& base_path, const AMResult& result);

void save_training_history_csv(const std::string& path, const ClassifierTrainResult& result);

}  // namespace pcam
