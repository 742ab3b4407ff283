#pragma once

#include <map>
#include <memory>
#include <string>

#include "rel/relation.hpp"

namespace rel {

// Slot for a derived relation's extent, shared between the fixpoint
// engine and any closures capturing the environment: closures see the
// current-stage extent through the slot.
struct ExtentSlot {
    RelationPtr rel;
};
using ExtentSlotPtr = std::shared_ptr<ExtentSlot>;

// Scoped partial mapping from identifiers to relations. Tuple-variable
// entries are singleton relations holding one first-order tuple and are
// keyed separately from value identifiers. Lookup is innermost-first;
// extension lets the newer binding win.
class Env : public std::enable_shared_from_this<Env> {
public:
    static std::shared_ptr<Env> root() { return std::shared_ptr<Env>(new Env(nullptr)); }

    std::shared_ptr<Env> extend(const std::string& name, RelationPtr rel) const {
        auto child = std::shared_ptr<Env>(new Env(shared_from_this()));
        child->vars_.emplace(name, std::move(rel));
        return child;
    }

    // Empty child frame, to be populated with bind()/bind_slot().
    std::shared_ptr<Env> fork() const {
        return std::shared_ptr<Env>(new Env(shared_from_this()));
    }

    std::shared_ptr<Env> extend_slot(const std::string& name, ExtentSlotPtr slot) const {
        auto child = std::shared_ptr<Env>(new Env(shared_from_this()));
        child->slots_.emplace(name, std::move(slot));
        return child;
    }

    // Mutating bind into this frame; used while building a scope in place.
    void bind(const std::string& name, RelationPtr rel) { vars_[name] = std::move(rel); }
    void bind_slot(const std::string& name, ExtentSlotPtr slot) { slots_[name] = std::move(slot); }

    RelationPtr lookup(const std::string& name) const {
        for (const Env* e = this; e; e = e->parent_.get()) {
            if (auto it = e->vars_.find(name); it != e->vars_.end()) return it->second;
            if (auto it = e->slots_.find(name); it != e->slots_.end()) return it->second->rel;
        }
        return nullptr;
    }

    bool bound(const std::string& name) const { return lookup(name) != nullptr; }

private:
    explicit Env(std::shared_ptr<const Env> parent) : parent_(std::move(parent)) {}

    std::shared_ptr<const Env> parent_;
    std::map<std::string, RelationPtr> vars_;
    std::map<std::string, ExtentSlotPtr> slots_;
};

using EnvPtr = std::shared_ptr<const Env>;

// Key used for tuple variables so they never collide with value identifiers.
inline std::string tuple_var_key(const std::string& name) { return name + "..."; }

}  // namespace rel
