"""Services package"""
from .storage import StorageService
from .sweep import SweepManager

__all__ = ["StorageService", "SweepManager"]
