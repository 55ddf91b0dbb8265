"""Infrastructure deployment agent: networks, replay memory, TD3 learner."""
from .buffer import ReplayBuffer
from .nets import Adam, Mlp, ShapeError
from .td3 import ALGORITHMS, Algorithm, Td3Agent, Td3Config, algorithm_from_dict, soft_update

__all__ = ["ReplayBuffer", "Adam", "Mlp", "ShapeError", "ALGORITHMS", "Algorithm", "Td3Agent",
           "Td3Config", "algorithm_from_dict", "soft_update"]
