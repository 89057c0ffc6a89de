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

#include "dynac/autodiff.h"

#include <sstream>

namespace dynac {

std::string ShapeString(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Parameter& ParameterRegistry::Add(const std::string& name, Matrix init,
                                  bool trainable) {
  if (index_.count(name)) {
    throw ConfigError("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  p->trainable = trainable;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterRegistry::Get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterRegistry::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IntegrityError("unknown parameter: " + name);
  return *params_[it->second];
}

bool ParameterRegistry::Contains(const std::string& name) const {
  return index_.count(name) > 0;
}

void ParameterRegistry::ZeroGrad() {
  for (auto& p : params_) p->grad.setZero(p->value.rows(), p->value.cols());
}

std::size_t ParameterRegistry::NumTrainableScalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable) n += static_cast<std::size_t>(p->value.size());
  }
  return n;
}

const Matrix& Var::value() const { return graph->Value(*this); }

Var Graph::Constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::Param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Node n;
  n.external = &p.value;
  n.needs_grad = record_ && p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Var{this, id};
}

Var Graph::Push(Matrix value, std::initializer_list<Var> inputs,
                BackwardFn fn) {
  return Push(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Graph::Push(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& v : inputs) {
      if (nodes_[v.id].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
    if (n.needs_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::Value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.value;
}

void Graph::Backward(Var loss) {
  if (!record_) throw std::logic_error("Backward on a non-recording graph");
  const Matrix& lv = Value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw DimensionError("Backward expects a 1x1 loss, got " +
                         ShapeString(lv));
  }
  if (!nodes_[loss.id].needs_grad) return;
  AccumulateGrad(loss, Matrix::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, Var{this, i}, n.grad);
    if (n.param) n.param->grad += n.grad;
  }
}

}  // namespace dynac
