#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

namespace knng {

constexpr std::uint32_t kInvalidId = 0xffffffffu;

// One candidate edge. `expanded` is search state (graph search marks the
// entries it has popped); `is_old` is propagation state (the local filter
// skips pairs whose both sides are old).
struct Neighbor {
    std::uint32_t id = 0;
    float dist = 0.f;
    bool expanded = false;
    bool is_old = false;
};

// Ties broken by id so that candidate sets are total-ordered and every
// seeded run is deterministic.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
}
inline bool closer(float dist, std::uint32_t id, const Neighbor& b) {
    if (dist != b.dist) return dist < b.dist;
    return id < b.id;
}

// Bounded candidate list kept strictly ascending by (dist, id), with
// distinct ids and never the owner itself.
class NeighborPool {
public:
    NeighborPool() = default;
    NeighborPool(std::uint32_t owner, std::size_t capacity) : owner_(owner), cap_(capacity) {
        entries_.reserve(capacity + 1);
    }

    // Insert-or-ignore. Returns false and leaves the pool unchanged when the
    // candidate is the owner, is already present, or the pool is full and
    // the candidate is no better than the worst entry; calling twice with
    // the same candidate is the same as calling once. A fresh insert enters
    // with is_old=false and expanded=false, and the tail is trimmed back to
    // capacity. The same id is always offered with the same distance, so a
    // duplicate sits exactly at the (dist, id) insertion point.
    bool update(std::uint32_t id, float dist) {
        if (id == owner_ || cap_ == 0) return false;
        if (entries_.size() >= cap_ && !closer(dist, id, entries_.back())) return false;
        std::size_t lo = 0, hi = entries_.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (closer(entries_[mid].dist, entries_[mid].id, {id, dist})) lo = mid + 1;
            else hi = mid;
        }
        if (lo < entries_.size() && entries_[lo].id == id) return false;
        entries_.insert(entries_.begin() + lo, Neighbor{id, dist, false, false});
        if (entries_.size() > cap_) entries_.pop_back();
        assert(well_formed());
        return true;
    }

    // Preload already-sorted entries (graph rows, warm starts). Distances
    // are taken as given and not recounted.
    void seed(std::span<const Neighbor> sorted) {
        entries_.assign(sorted.begin(), sorted.end());
        if (entries_.size() > cap_) entries_.resize(cap_);
    }

    bool contains(std::uint32_t id) const {
        for (const Neighbor& e : entries_)
            if (e.id == id) return true;
        return false;
    }

    std::uint32_t owner() const { return owner_; }
    std::size_t capacity() const { return cap_; }
    std::size_t size() const { return entries_.size(); }
    bool full() const { return entries_.size() >= cap_; }
    const std::vector<Neighbor>& entries() const { return entries_; }
    std::vector<Neighbor>& entries() { return entries_; }

    // Invariant check used by the tests and debug builds.
    bool well_formed() const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].id == owner_) return false;
            if (i > 0 && !closer(entries_[i - 1], entries_[i])) return false;
        }
        return entries_.size() <= cap_;
    }

private:
    std::uint32_t owner_ = kInvalidId;
    std::size_t cap_ = 0;
    std::vector<Neighbor> entries_;
};

// 1-byte test-and-set lock for per-node pools and adjacency lists.
class Spinlock {
public:
    void lock() {
        while (flag_.test_and_set(std::memory_order_acquire)) {
#if defined(__x86_64__) || defined(__i386__)
            __builtin_ia32_pause();
#endif
        }
    }
    void unlock() { flag_.clear(std::memory_order_release); }

    class Guard {
    public:
        explicit Guard(Spinlock& l) : l_(l) { l_.lock(); }
        ~Guard() { l_.unlock(); }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        Spinlock& l_;
    };

private:
    std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

// Epoch-stamped membership set over ids [0, n); begin() is O(1) so one
// instance serves many queries. Realizes the n-bit visited bitmap.
class VisitedSet {
public:
    explicit VisitedSet(std::uint32_t n = 0) : stamp_(n, 0) {}

    void reset(std::uint32_t n) {
        stamp_.assign(n, 0);
        epoch_ = 0;
    }

    void begin() {
        if (++epoch_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            epoch_ = 1;
        }
    }

    bool test_and_set(std::uint32_t id) {
        assert(id < stamp_.size());
        if (stamp_[id] == epoch_) return true;
        stamp_[id] = epoch_;
        return false;
    }

    bool contains(std::uint32_t id) const { return stamp_[id] == epoch_; }

    std::uint64_t bytes() const { return stamp_.size() * sizeof(std::uint32_t); }

private:
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
};

}  // namespace knng
