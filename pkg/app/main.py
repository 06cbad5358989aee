from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from datetime import datetime
import json
import logging

from app.api.routes import scripts, system_info
from app.core.config import settings
from app.core.exceptions import PositivityError

# Configure logging
logging.basicConfig(level=settings.LOG_LEVEL)
logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.PROJECT_NAME,
    description="Positivity certificates for algebras of functions built by extension towers",
    version="1.0.0",
    license_info={
        "name": "MIT License",
        "url": "https://opensource.org/licenses/MIT",
    },
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(scripts.router, prefix=f"{settings.API_V1_STR}/scripts", tags=["Scripts"])

# System information and health routes
app.include_router(system_info.router, prefix=f"{settings.API_V1_STR}/system", tags=["System Information"])


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    errors = []
    for error in exc.errors():
        error_detail = {
            "loc": error["loc"],
            "msg": error["msg"],
            "type": error["type"],
        }
        errors.append(error_detail)

    logger.error(f"Validation error: {json.dumps(errors, default=str)}")

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={
            "success": False,
            "error": {
                "code": "VALIDATION_ERROR",
                "message": "Validation error",
                "details": errors,
            }
        },
    )


@app.exception_handler(PositivityError)
async def positivity_exception_handler(request: Request, exc: PositivityError):
    logger.error(f"{type(exc).__name__}: {exc.message}")
    return JSONResponse(status_code=exc.status_code, content={"detail": exc.to_dict()})


# API landing page (public)
@app.get("/", include_in_schema=False)
async def root():
    return {
        "message": f"Welcome to the {settings.PROJECT_NAME} API",
        "status": "running",
        "version": app.version,
        "endpoints": {
            "health": "/health",
            "docs": "/docs",
            "scripts": f"{settings.API_V1_STR}/scripts",
        }
    }


# Health check endpoint
@app.get("/health", tags=["Health"])
async def health_check(request: Request):
    """
    Health check endpoint to verify the service is running.

    Returns:
        dict: Status information including service name and current status
    """
    return {
        "status": "healthy",
        "service": "positivity-workbench",
        "version": app.version,
        "timestamp": datetime.utcnow().isoformat(),
    }
