"""Open-edge sampling, cluster analysis and epidemic dynamics."""
