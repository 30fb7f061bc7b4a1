#pragma once

#include <map>
#include <memory>
#include <mutex>

namespace qtomo {

/// Write-once-per-key map of immutable values, safe for concurrent readers.
/// The builder runs outside the lock; if two threads race on one key the
/// first inserted value wins and both callers receive it.
template <class Key, class Value>
class OnceCache {
public:
    template <class Builder>
    std::shared_ptr<const Value> get(const Key& key, Builder&& build) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        }
        auto built = std::make_shared<const Value>(build());
        std::lock_guard lock(mutex_);
        auto [it, inserted] = entries_.emplace(key, std::move(built));
        return it->second;
    }

    void clear() {
        std::lock_guard lock(mutex_);
        entries_.clear();
    }

private:
    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const Value>> entries_;
};

}  // namespace qtomo
