#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcam/point_cloud.hpp"
#include "pcam/pointnet.hpp"

namespace pcam {

struct ReviewEntry {
  std::string instance_id;
  int true_label = 0;
  int predicted_label = 0;
  double confidence = 0.0;  // probability of the predicted class
};

struct ReviewReport {
  std::vector<ReviewEntry> entries;  // every misclassified test instance
  int test_size = 0;
  double accuracy = 0.0;
};

/// Classifies the test split and lists every miss.
ReviewReport review_misclassifications(const ClassifierModel& model, const DatasetSplit& split);

/// Side-by-side export: for each misclassified instance, a bundle directory
/// with the instance cloud plus the AM clouds of its true and predicted
/// classes. Every involved class must have an AM cloud, otherwise a
/// contract error names the class.
ReviewReport export_review_bundles(const ClassifierModel& model, const DatasetSplit& split,
                                   const std::map<int, PointCloud>& am_cloud_by_class,
                                   const std::string& out_dir);

}  // namespace pcam
