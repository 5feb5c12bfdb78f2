#include "discnn/common.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace discnn {

const char* role_name(Role role) {
    switch (role) {
        case Role::Positive: return "positive";
        case Role::Negative: return "negative";
        case Role::Unseen: return "unseen";
    }
    return "unknown";
}

Role role_from_name(const std::string& name) {
    if (name == "positive") return Role::Positive;
    if (name == "negative") return Role::Negative;
    if (name == "unseen") return Role::Unseen;
    throw ConfigError("unknown role name: '" + name + "' (expected positive|negative|unseen)");
}

namespace num {

namespace {

int clamp_threads(int n) {
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int cap = hw > 0 ? hw : 1;
    if (n <= 0) return cap;
    return std::min(n, 64);
}

int g_num_threads = clamp_threads(0);

}  // namespace

void set_num_threads(int n) { g_num_threads = clamp_threads(n); }

int num_threads() { return g_num_threads; }

void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (count <= 0) return;
    const int workers = std::min<std::int64_t>(g_num_threads, count);
    if (workers <= 1) {
        fn(0, count);
        return;
    }
    const std::int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk, count);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(0, std::min<std::int64_t>(chunk, count));
    for (auto& t : pool) t.join();
}

}  // namespace num

}  // namespace discnn
