"""
System Information API Routes
Provides service health and the active numerical settings
"""

from fastapi import APIRouter
from typing import Dict, Any
import logging

import numpy
import scipy
import sympy

from app.core.config import settings

router = APIRouter()
logger = logging.getLogger(__name__)


@router.get("/health")
async def get_basic_health() -> Dict[str, Any]:
    """Basic health check"""
    return {
        "status": "healthy",
        "message": "API is running",
        "environment": settings.ENVIRONMENT,
    }


@router.get("/capabilities")
async def get_system_capabilities() -> Dict[str, Any]:
    """Library versions and the defaults scripts run with"""
    return {
        "libraries": {
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "sympy": sympy.__version__,
        },
        "defaults": {
            "seed": settings.DEFAULT_SEED,
            "domain_samples": settings.DOMAIN_SAMPLES,
            "variety_samples": settings.VARIETY_SAMPLES,
            "neighborhood_radius": settings.NEIGHBORHOOD_RADIUS,
            "sdp_tol": settings.SDP_TOL,
            "d_max": settings.D_MAX,
        },
        "adjunctions": ["oddroot", "evenroot", "recip", "piecewise", "chi"],
        "checks": ["nonneg", "nonzero", "inj4", "alinj4", "alinj5", "comp"],
    }
