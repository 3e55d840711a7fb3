#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dact/error.hpp"
#include "dact/tensor.hpp"

namespace dact {

/// One trainable tensor with its gradient and Adam moments.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> first_moment;
    Tensor<T> second_moment;
    std::uint64_t step = 0;
    bool trainable = true;

    Param(std::string n, Tensor<T> v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(value.shape()),
          first_moment(value.shape()),
          second_moment(value.shape()) {}

    void reset_optimizer_state() {
        first_moment.fill(T{0});
        second_moment.fill(T{0});
        step = 0;
    }
};

/// Named parameters in insertion order. Entries are addressed by name or by
/// index; indices stay valid until an entry is removed.
template <typename T>
class ParamStore {
public:
    using Entry = Param<T>;

    Entry& add(const std::string& name, Tensor<T> value) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
        index_.emplace(name, entries_.size());
        entries_.emplace_back(name, std::move(value));
        return entries_.back();
    }

    /// Replaces the value of an existing entry (shape may change); gradient and
    /// optimizer state are reset. Position in the iteration order is kept.
    Entry& reset(const std::string& name, Tensor<T> value) {
        auto& slot = get(name);
        bool trainable = slot.trainable;
        slot = Entry(name, std::move(value));
        slot.trainable = trainable;
        return slot;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Entry& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return entries_[it->second];
    }
    const Entry& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return entries_[it->second];
    }

    const Tensor<T>& value(const std::string& name) const { return get(name).value; }
    Tensor<T>& value(const std::string& name) { return get(name).value; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    void zero_grad() {
        for (auto& e : entries_) e.grad.fill(T{0});
    }

    void reset_optimizer_state() {
        for (auto& e : entries_) e.reset_optimizer_state();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& e : entries_) {
            out.add(e.name, e.value.template cast<U>()).trainable = e.trainable;
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dact
