#include "mac/slot_machine.hpp"

#include <set>
#include <sstream>

namespace railsim::mac {

const char* to_string(TurnKind k) {
  switch (k) {
    case TurnKind::Idle: return "idle";
    case TurnKind::Data: return "data";
    case TurnKind::Enqueue: return "enqueue";
    case TurnKind::DequeueIntent: return "dequeue_intent";
    case TurnKind::DequeueSort: return "dequeue_sort";
    case TurnKind::CollectTx: return "collect_tx";
    case TurnKind::CollectIdle: return "collect_idle";
  }
  return "?";
}

BackoffSlotMachine::Member* BackoffSlotMachine::find(int node) {
  for (Member& m : members_)
    if (m.node == node) return &m;
  return nullptr;
}

const BackoffSlotMachine::Member* BackoffSlotMachine::find(int node) const {
  for (const Member& m : members_)
    if (m.node == node) return &m;
  return nullptr;
}

int BackoffSlotMachine::max_position() const {
  int mx = 0;
  for (const Member& m : members_) mx = std::max(mx, m.self_pos);
  return mx;
}

void BackoffSlotMachine::request_dequeue(int node) {
  Member* m = find(node);
  if (!m) throw InvariantViolation("dequeue request from a non-member");
  if (!m->alive) throw InvariantViolation("dequeue request from a dead node");
  m->wants_out = true;
}

void BackoffSlotMachine::kill(int node) {
  Member* m = find(node);
  if (!m) throw InvariantViolation("kill of a non-member");
  if (!m->alive) throw InvariantViolation("node killed twice");
  m->alive = false;
}

bool BackoffSlotMachine::begin_collection() {
  if (mode_ != Mode::Normal || pending_sort_) return false;
  for (Member& m : members_) {
    m.memorized = m.self_pos;
    m.heard = false;
  }
  ledger_heard_.assign(ledger_.size(), false);
  mode_ = Mode::Collecting;
  collect_counter_ = 1;
  return true;
}

TurnOutcome BackoffSlotMachine::decide_collection() {
  TurnOutcome out;
  const Member* holder = nullptr;
  for (const Member& m : members_)
    if (m.memorized == collect_counter_) holder = &m;
  if (holder && holder->alive) {
    out.kind = TurnKind::CollectTx;
    out.transmitter = holder->node;
    out.p_eff = holder->self_pos;  // counts down its current position
    out.wait_slots = holder->self_pos;
    out.carried_data = false;  // decide() flips this when the holder has data
  } else {
    // nobody answers this counter value: a hole, or a dead node's slot
    out.kind = TurnKind::CollectIdle;
    out.wait_slots = max_position() + 1;
  }
  out.collection_ended = (collect_counter_ == capacity_);
  return out;
}

void BackoffSlotMachine::commit(const TurnOutcome& out) {
  switch (out.kind) {
    case TurnKind::Idle:
      break;

    case TurnKind::Data:
    case TurnKind::CollectTx: {
      for (Member& m : members_)
        if (m.node != out.transmitter && m.self_pos > out.p_eff) --m.self_pos;
      Member* tx = find(out.transmitter);
      tx->self_pos = capacity_;
      if (out.kind == TurnKind::CollectTx) tx->heard = true;
      // mirror, from the on-air observation alone
      for (auto& [node, pos] : ledger_)
        if (node != out.transmitter && pos > out.p_eff) --pos;
      for (std::size_t i = 0; i < ledger_.size(); ++i)
        if (ledger_[i].first == out.transmitter) {
          ledger_[i].second = capacity_;
          if (out.kind == TurnKind::CollectTx) ledger_heard_[i] = true;
        }
      break;
    }

    case TurnKind::Enqueue: {
      for (Member& m : members_)
        if (m.self_pos > 0) --m.self_pos;
      members_.push_back(Member{staged_arrival_, capacity_, true, false, -1});
      for (auto& [node, pos] : ledger_)
        if (pos > 0) --pos;
      ledger_.emplace_back(staged_arrival_, capacity_);
      ledger_heard_.push_back(false);
      break;
    }

    case TurnKind::DequeueIntent: {
      // announcement only; positions move when the sort broadcast lands
      pending_sort_ = PendingSort{out.transmitter, out.p_eff};
      break;
    }

    case TurnKind::DequeueSort: {
      if (!pending_sort_)
        throw InvariantViolation("sort turn without a pending exit");
      int gone = pending_sort_->node;
      int p_out = pending_sort_->p_out;
      pending_sort_.reset();
      std::erase_if(members_, [&](const Member& m) { return m.node == gone; });
      for (Member& m : members_)
        if (m.self_pos < p_out) ++m.self_pos;
      for (std::size_t i = 0; i < ledger_.size();) {
        if (ledger_[i].first == gone) {
          ledger_.erase(ledger_.begin() + i);
          ledger_heard_.erase(ledger_heard_.begin() + i);
        } else {
          if (ledger_[i].second < p_out) ++ledger_[i].second;
          ++i;
        }
      }
      break;
    }

    case TurnKind::CollectIdle:
      break;
  }

  if (mode_ == Mode::Collecting &&
      (out.kind == TurnKind::CollectTx || out.kind == TurnKind::CollectIdle)) {
    ++collect_counter_;
    if (out.collection_ended) end_collection();
  }

  check_invariants(out);
}

void BackoffSlotMachine::end_collection() {
  // keep exactly what the sweep heard: a node that answered and died right
  // after stays on the books as a phantom until the next sweep clears it
  std::erase_if(members_, [](const Member& m) { return !m.heard; });
  for (Member& m : members_) m.memorized = -1;
  // entries silent through the whole sweep are gone
  for (std::size_t i = 0; i < ledger_.size();) {
    if (!ledger_heard_[i]) {
      ledger_.erase(ledger_.begin() + i);
      ledger_heard_.erase(ledger_heard_.begin() + i);
    } else {
      ++i;
    }
  }
  last_collection_count_ = static_cast<int>(members_.size());
  mode_ = Mode::Normal;
  collect_counter_ = 0;
}

void BackoffSlotMachine::check_invariants(const TurnOutcome& out) const {
  if (ledger_.size() != members_.size())
    throw InvariantViolation("ledger and membership diverged in size");
  std::set<int> seen;
  for (const Member& m : members_) {
    if (m.self_pos < 1 || m.self_pos > capacity_) {
      std::ostringstream os;
      os << "position out of range: node " << m.node << " at " << m.self_pos;
      throw InvariantViolation(os.str());
    }
    if (!seen.insert(m.self_pos).second)
      throw InvariantViolation("duplicate queue position");
    bool mirrored = false;
    for (const auto& [node, pos] : ledger_)
      if (node == m.node) {
        mirrored = (pos == m.self_pos);
        break;
      }
    if (!mirrored)
      throw InvariantViolation("ledger disagrees with a node's own position");
  }
  if (mode_ == Mode::Normal && !members_.empty()) {
    // queue is anchored at the tail: k members occupy N-k+1 .. N
    int k = static_cast<int>(members_.size());
    if (*seen.begin() != capacity_ - k + 1 || *seen.rbegin() != capacity_)
      throw InvariantViolation("queue positions not contiguous at the tail");
  }
  if (out.kind == TurnKind::DequeueIntent) {
    // announced position must match the coordinator's books
    for (const auto& [node, pos] : ledger_)
      if (node == out.transmitter && pos != out.p_eff)
        throw InvariantViolation("exit announcement position mismatch");
  }
}

std::vector<std::pair<int, int>> BackoffSlotMachine::ledger_snapshot() const {
  LedgerGuard::on_ledger_read();
  auto snap = ledger_;
  std::sort(snap.begin(), snap.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  return snap;
}

int BackoffSlotMachine::ledger_position(int node) const {
  LedgerGuard::on_ledger_read();
  for (const auto& [n, pos] : ledger_)
    if (n == node) return pos;
  return 0;
}

std::vector<int> BackoffSlotMachine::ledger_nodes() const {
  LedgerGuard::on_ledger_read();
  std::vector<int> out;
  out.reserve(ledger_.size());
  for (const auto& [n, pos] : ledger_) out.push_back(n);
  return out;
}

bool BackoffSlotMachine::member_alive(int node) const {
  const Member* m = find(node);
  if (!m) throw InvariantViolation("probe of a node that was never admitted");
  return m->alive;
}

}  // namespace railsim::mac
