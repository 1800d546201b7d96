#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatfactor/gibbs.hpp"
#include "spatfactor/model.hpp"
#include "spatfactor/simulate.hpp"

namespace spatfactor::io {

// all doubles go through one formatter so identical runs stay byte-identical
std::string fmt(double v);

void write_text_atomic(const std::string& path, const std::string& content);
std::uint64_t fnv64_file(const std::string& path);

// dataset CSV: location_id,x,y,type,time,value[,cov1..covP]
void write_dataset_csv(const std::string& path, const Dataset& data);

struct LoadedDataset {
  Dataset data;
  bool rescaled_timepoints = false;  // equispaced grid normalized to unit steps
  std::vector<double> raw_timepoints;
};
LoadedDataset read_dataset_csv(const std::string& path);

void write_truth_csv(const std::string& path, const sim::GroundTruth& truth,
                     const Eigen::MatrixXd& coords, int O);

// posterior store persisted as one CSV per parameter family plus store_meta
void write_store(const std::string& dir, const gibbs::PosteriorStore& store,
                 const Dataset& data);

struct StoreBundle {
  gibbs::PosteriorStore store;
  Eigen::MatrixXd coords;
  std::vector<double> timepoints;
  bool equispaced = true;
};
StoreBundle load_store(const std::string& dir);

// prediction draws: rows = kept iterations, columns = flattened cells
void write_prediction_csv(const std::string& path,
                          const std::vector<Eigen::MatrixXd>& draws, int n_sites,
                          int O, int n_times, const std::string& time_prefix);

void write_labels_csv(const std::string& path, const Eigen::MatrixXd& coords,
                      const std::vector<int>& labels);

}  // namespace spatfactor::io
