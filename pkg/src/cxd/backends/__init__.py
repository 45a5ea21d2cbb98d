"""Backend contracts and implementations (planner, denoiser, retouch)."""
