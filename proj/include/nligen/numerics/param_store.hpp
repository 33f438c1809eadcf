#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nligen/numerics/tensor.hpp"

namespace nligen {

enum class UpdateMode {
    Dense,     // every element updated each optimizer step
    RowSparse, // only rows touched since the last step are updated; per-row step counts
    Frozen,    // stored and checkpointed, never updated
};

struct ParamEntry {
    std::string name;
    UpdateMode mode = UpdateMode::Dense;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    std::vector<std::uint64_t> row_steps; // RowSparse only
    std::vector<std::uint8_t> touched;    // RowSparse only
};

using ParamId = std::size_t;

// Named parameter tensors with matching gradient and Adam slots.
// Single-writer: one training loop owns a store at a time.
class ParamStore {
public:
    ParamId add(const std::string& name, std::vector<std::size_t> dims, UpdateMode mode = UpdateMode::Dense);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    ParamId id(const std::string& name) const;
    std::size_t size() const { return entries_.size(); }

    ParamEntry& entry(ParamId id) { return entries_.at(id); }
    const ParamEntry& entry(ParamId id) const { return entries_.at(id); }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    Tensor& value(ParamId id) { return entries_[id].value; }
    const Tensor& value(ParamId id) const { return entries_[id].value; }
    Tensor& value(const std::string& name) { return entries_[id(name)].value; }
    const Tensor& value(const std::string& name) const { return entries_[id(name)].value; }
    Tensor& grad(ParamId id) { return entries_[id].grad; }
    const Tensor& grad(ParamId id) const { return entries_[id].grad; }
    Tensor& grad(const std::string& name) { return entries_[id(name)].grad; }

    // Marks a row of a RowSparse entry as carrying gradient this step.
    void touch_row(ParamId id, std::size_t row);

    void zero_grad();
    double grad_norm() const;
    // Rescales all gradients so the global L2 norm is at most max_norm.
    // Returns the norm before clipping.
    double clip_grad_norm(double max_norm);

    std::uint64_t step_count() const { return step_count_; }
    void set_step_count(std::uint64_t s) { step_count_ = s; }

    // Number of trainable scalars.
    std::size_t trainable_count() const;

    // Copies values from another store with identical layout.
    void copy_values_from(const ParamStore& other);

private:
    std::vector<ParamEntry> entries_;
    std::map<std::string, ParamId> index_;
    std::uint64_t step_count_ = 0;
};

} // namespace nligen
