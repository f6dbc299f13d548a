"""
谱计算命令行入口
用法: python run_spectra.py bands --kappa 2.8
"""

import sys
import os
import logging

# 添加项目根目录到路径
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)
sys.path.insert(0, os.path.join(project_root, 'src'))

from config.settings import settings  # noqa: E402

# 设置日志
logging.basicConfig(
    level=getattr(logging, settings.logging.level.upper(), logging.INFO),
    format=settings.logging.format,
    filename=settings.logging.file,
)

from cli.commands import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
