__version__ = "0.1.0"
__author__ = "The lookahead developers"
__copyright__ = "2026, The lookahead developers"
__license__ = "Apache 2.0"
__description__ = "Competitive ratios of reward-lookahead agents in MDPs"

__all__ = [
    "__author__",
    "__version__",
    "__copyright__",
    "__license__",
    "__description__",
]
