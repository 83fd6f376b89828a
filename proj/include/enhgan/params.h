// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "enhgan/graph.h"
#include "enhgan/tensor.h"

namespace enhgan {

// Ordered set of named parameter tensors for one network. Order is the
// definition order (stable across runs), which fixes checkpoint layout and
// optimizer slot assignment.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
  }
  Tensor& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamSet: unknown name " + name);
    return items_[it->second].second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamSet: unknown name " + name);
    return items_[it->second].second;
  }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  size_t size() const { return items_.size(); }
  std::pair<std::string, Tensor>& item(size_t i) { return items_[i]; }
  const std::pair<std::string, Tensor>& item(size_t i) const { return items_[i]; }

  int64_t total_scalars() const {
    int64_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::map<std::string, size_t> index_;
};

// Graph bindings for one ParamSet: every parameter becomes a grad-enabled
// leaf; after backward() the gradients can be read back in the same order.
class BoundParams {
 public:
  BoundParams(Graph& graph, const ParamSet& params, bool requires_grad = true) : graph_(&graph) {
    for (size_t i = 0; i < params.size(); ++i) {
      names_.push_back(params.item(i).first);
      vars_.push_back(graph.leaf(params.item(i).second, requires_grad));
    }
    for (size_t i = 0; i < names_.size(); ++i) index_[names_[i]] = i;
  }

  VarId operator[](const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("BoundParams: unknown name " + name);
    return vars_[it->second];
  }
  size_t size() const { return vars_.size(); }
  VarId var(size_t i) const { return vars_[i]; }
  const std::string& name(size_t i) const { return names_[i]; }

  // Gradients in definition order (zeros where unused).
  std::vector<Tensor> gradients() const {
    std::vector<Tensor> g;
    g.reserve(vars_.size());
    for (VarId v : vars_) g.push_back(graph_->grad(v));
    return g;
  }

 private:
  Graph* graph_;
  std::vector<std::string> names_;
  std::vector<VarId> vars_;
  std::map<std::string, size_t> index_;
};

}  // namespace enhgan
