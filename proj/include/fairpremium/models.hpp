//
// Copyright 2026 The Fairpremium Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FAIRPREMIUM_MODELS_HPP_
#define FAIRPREMIUM_MODELS_HPP_

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace fairpremium {

enum class LossKind { kSquaredError, kBinaryCrossEntropy };
enum class OutputLink { kIdentity, kSigmoid };

// Pointwise loss.  Cross-entropy requires a {0,1} target and clips the
// prediction into [1e-12, 1 - 1e-12] so saturated scores stay finite.
double loss(LossKind kind, double prediction, double target);

// Per-feature affine normalization fitted on training inputs and stored with
// the model, so scoring always accepts raw features.  Statistics are
// accumulated over sorted values, which makes them independent of record
// order; constant columns get unit scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  bool empty() const { return mean.size() == 0; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& x);

struct LinearModel {
  Eigen::VectorXd w;
  double b = 0.0;
  OutputLink link = OutputLink::kIdentity;
  Standardizer standardizer;
};

// Fully connected net: hidden layers with ReLU activations, affine scalar
// output passed through `link`.  weights[l] has shape dims[l+1] x dims[l].
struct FeedForwardNet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  OutputLink link = OutputLink::kIdentity;
  Standardizer standardizer;

  int input_dim() const;
  // Width of the last hidden layer (the learned representation).
  int representation_dim() const;
};

LinearModel make_linear(int input_dim, OutputLink link);
FeedForwardNet make_net(int input_dim, const std::vector<int>& hidden,
                        OutputLink link);

using Model = std::variant<LinearModel, FeedForwardNet>;

double forward(const Model& model, const Eigen::VectorXd& x);
Eigen::VectorXd forward_batch(const Model& model, const Eigen::MatrixXd& x);

// Activations of the last hidden layer on raw input; the reusable
// transformation part of a trained net.
Eigen::VectorXd extract_representation(const FeedForwardNet& net,
                                       const Eigen::VectorXd& x);
Eigen::MatrixXd representation_batch(const FeedForwardNet& net,
                                     const Eigen::MatrixXd& x);

// Versioned flat-text serialization: dims, link, normalization vectors and
// parameters, every value printed with round-trip precision so that
// save/load reproduces the model bit-exactly.
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);
void save_model_file(const std::string& path, const Model& model);
Model load_model_file(const std::string& path);

}  // namespace fairpremium

#endif  // FAIRPREMIUM_MODELS_HPP_
