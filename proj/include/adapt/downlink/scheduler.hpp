#pragma once

#include <adapt/downlink/wire.hpp>

#include <array>
#include <deque>
#include <vector>

namespace adapt::downlink {

/// Outbound frames by priority class. Lossy-latest streams keep only their
/// newest frame queued.
class PriorityQueues {
public:
    void push(Frame f) {
        auto& q = levels_[priority_of(f.type)];
        if (lossy_latest(f.type)) {
            for (auto it = q.begin(); it != q.end(); ++it)
                if (it->type == f.type) {
                    bytes_ -= it->wire_size();
                    ++superseded_;
                    q.erase(it);
                    break;
                }
        }
        bytes_ += f.wire_size();
        q.push_back(std::move(f));
    }

    /// Retransmissions go ahead of fresh frames of their class.
    void push_front(Frame f) {
        bytes_ += f.wire_size();
        levels_[priority_of(f.type)].push_front(std::move(f));
    }

    [[nodiscard]] const Frame* head() const {
        for (const auto& q : levels_)
            if (!q.empty())
                return &q.front();
        return nullptr;
    }

    Frame pop() {
        for (auto& q : levels_)
            if (!q.empty()) {
                Frame f = std::move(q.front());
                q.pop_front();
                bytes_ -= f.wire_size();
                return f;
            }
        throw ContractError("pop from empty queues");
    }

    /// Drops the oldest queued thumbnail; false when there is none.
    bool evict_oldest_thumbnail() {
        auto& q = levels_[priority_of(MsgType::thumbnail)];
        if (q.empty())
            return false;
        bytes_ -= q.front().wire_size();
        q.pop_front();
        return true;
    }

    [[nodiscard]] bool empty() const { return head() == nullptr; }
    [[nodiscard]] std::size_t bytes() const { return bytes_; }
    [[nodiscard]] std::size_t superseded() const { return superseded_; }
    [[nodiscard]] std::size_t count(MsgType t) const {
        std::size_t n = 0;
        for (const auto& f : levels_[priority_of(t)])
            n += f.type == t;
        return n;
    }

private:
    std::array<std::deque<Frame>, kPriorityLevels> levels_;
    std::size_t bytes_ = 0;
    std::size_t superseded_ = 0;
};

/// Takes frames in strict priority order (FIFO within a class) while they
/// fit in `budget_bytes`. Stops at the first frame that does not fit, so a
/// large urgent frame is never starved by smaller, less urgent ones.
[[nodiscard]] inline std::vector<Frame> schedule(PriorityQueues& queues, std::size_t budget_bytes) {
    std::vector<Frame> batch;
    std::size_t used = 0;
    while (const Frame* f = queues.head()) {
        if (used + f->wire_size() > budget_bytes)
            break;
        used += f->wire_size();
        batch.push_back(queues.pop());
    }
    return batch;
}

} // namespace adapt::downlink
