// Copyright (c) 2026 DYNAC contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNAC_AUTODIFF_H_
#define DYNAC_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace dynac {

// Row-major dense matrix of doubles. Every value flowing through the model
// (hidden states, bias embeddings, score and probability grids) is one of
// these.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ShapeString(const Matrix& m);

struct Parameter {
  std::string name;
  Matrix value;
  // Same shape as value. Accumulator state, written by Graph::Backward.
  mutable Matrix grad;
  bool trainable = true;
};

// Owns every parameter of a model. Names are unique and insertion order is
// stable, which fixes the checkpoint layout.
class ParameterRegistry {
 public:
  ParameterRegistry() = default;
  ParameterRegistry(const ParameterRegistry&) = delete;
  ParameterRegistry& operator=(const ParameterRegistry&) = delete;
  ParameterRegistry(ParameterRegistry&&) = default;
  ParameterRegistry& operator=(ParameterRegistry&&) = default;

  Parameter& Add(const std::string& name, Matrix init, bool trainable = true);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const;

  void ZeroGrad();
  std::size_t size() const { return params_.size(); }
  // Total number of trainable scalars.
  std::size_t NumTrainableScalars() const;

  const std::vector<std::unique_ptr<Parameter>>& params() const {
    return params_;
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

class Graph;

// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
// sweep visits every node after all of its consumers. A graph built with
// record = false keeps values only and is used for inference.
class Graph {
 public:
  // `self` is the node being differentiated; its value is g.Value(self).
  using BackwardFn =
      std::function<void(Graph& g, Var self, const Matrix& out_grad)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var Constant(Matrix value);
  // Leaf bound to a parameter. The value is referenced, not copied; the
  // parameter must outlive the graph.
  Var Param(const Parameter& p);
  // Appends an op result. `fn` receives the gradient of the new node and must
  // route it to `inputs` via AccumulateGrad.
  Var Push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var Push(Matrix value, const std::vector<Var>& inputs, BackwardFn fn);

  const Matrix& Value(Var v) const;
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }

  template <typename Derived>
  void AccumulateGrad(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape. Gradients of parameter
  // leaves are added to Parameter::grad.
  void Backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    const Parameter* param = nullptr;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace dynac

#endif  // DYNAC_AUTODIFF_H_
