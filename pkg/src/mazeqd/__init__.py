"""Quality-diversity neuroevolution (novelty, surprise, local competition) on deceptive mazes."""

__version__ = "0.1.0"
