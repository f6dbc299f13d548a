"""
锯齿晶格谱计算测试模块
包含 Airy 内核、能带、谱密度、有限晶格、随机扰动与命令行测试
"""
