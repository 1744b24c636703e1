#ifndef STM_TOPICS_HPP
#define STM_TOPICS_HPP

#include <vector>

namespace stm {

// K x V row-stochastic matrix; row k is topic k's distribution over the vocabulary.
using TopicWordMatrix = std::vector<std::vector<double>>;

}  // namespace stm

#endif
