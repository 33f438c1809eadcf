#include "nligen/numerics/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace nligen {

ParamId ParamStore::add(const std::string& name, std::vector<std::size_t> dims, UpdateMode mode) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    ParamEntry e;
    e.name = name;
    e.mode = mode;
    e.value = Tensor(dims);
    if (mode != UpdateMode::Frozen) {
        e.grad = Tensor(dims);
        e.adam_m = Tensor(dims);
        e.adam_v = Tensor(dims);
    }
    if (mode == UpdateMode::RowSparse) {
        e.row_steps.assign(e.value.rows(), 0);
        e.touched.assign(e.value.rows(), 0);
    }
    const ParamId id = entries_.size();
    entries_.push_back(std::move(e));
    index_.emplace(name, id);
    return id;
}

ParamId ParamStore::id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

void ParamStore::touch_row(ParamId id, std::size_t row) {
    auto& e = entries_[id];
    if (e.mode == UpdateMode::RowSparse) e.touched.at(row) = 1;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) {
        if (e.mode == UpdateMode::Frozen) continue;
        if (e.mode == UpdateMode::RowSparse) {
            for (std::size_t r = 0; r < e.touched.size(); ++r) {
                if (e.touched[r]) {
                    for (double& g : e.grad.row(r)) g = 0.0;
                    e.touched[r] = 0;
                }
            }
        } else {
            e.grad.set_zero();
        }
    }
}

double ParamStore::grad_norm() const {
    double sq = 0.0;
    for (const auto& e : entries_) {
        if (e.mode == UpdateMode::Frozen) continue;
        if (e.mode == UpdateMode::RowSparse) {
            for (std::size_t r = 0; r < e.touched.size(); ++r) {
                if (!e.touched[r]) continue;
                for (double g : e.grad.row(r)) sq += g * g;
            }
        } else {
            sq += e.grad.vector().squaredNorm();
        }
    }
    return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& e : entries_) {
            if (e.mode == UpdateMode::Frozen) continue;
            if (e.mode == UpdateMode::RowSparse) {
                for (std::size_t r = 0; r < e.touched.size(); ++r) {
                    if (!e.touched[r]) continue;
                    for (double& g : e.grad.row(r)) g *= scale;
                }
            } else {
                e.grad.vector() *= scale;
            }
        }
    }
    return norm;
}

std::size_t ParamStore::trainable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (e.mode != UpdateMode::Frozen) n += e.value.size();
    }
    return n;
}

void ParamStore::copy_values_from(const ParamStore& other) {
    if (other.entries_.size() != entries_.size()) throw std::invalid_argument("parameter layouts differ");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name || !entries_[i].value.same_shape(other.entries_[i].value)) {
            throw std::invalid_argument("parameter layouts differ at " + entries_[i].name);
        }
        entries_[i].value = other.entries_[i].value;
    }
}

} // namespace nligen
