// PI step routine, decompiled

void FUN_00101a40(long param_1,double param_2)
{
  double dVar1;
  double dVar2;
  double dVar3;
  double dVar4;
  double dVar5;
  double dVar6;
  double dVar7;
  double dVar8;
  dVar1 = *(double *)(param_1 + 0x60) - *(double *)(param_1 + 0x70);
  *(double *)(param_1 + 0x98) = dVar1;
  dVar2 = *(double *)(param_1 + 0x90) * *(double *)(param_1 + 0x60) - *(double *)(param_1 + 0x70);
  *(double *)(param_1 + 0x58) = dVar2;
  dVar3 = *(double *)(param_1 + 0x28) * *(double *)(param_1 + 0x58);
  *(double *)(param_1 + 0x18) = dVar3;
  dVar4 = *(double *)(param_1 + 0x28) * *(double *)(param_1 + 0x38);
  *(double *)(param_1 + 0x88) = dVar4;
  dVar5 = *(double *)(param_1 + 0x30) * *(double *)(param_1 + 0x60) * 0.5;
  *(double *)(param_1 + 0x68) = dVar5;
  dVar6 = *(double *)(param_1 + 0x18) + *(double *)(param_1 + 0x88) + *(double *)(param_1 + 0x68);
  *(double *)(param_1 + 0x48) = dVar6;
  dVar7 = *(double *)(param_1 + 0x80) * *(double *)(param_1 + 0x48);
  *(double *)(param_1 + 0x78) = dVar7;
  dVar8 = *(double *)(param_1 + 0x40) * *(double *)(param_1 + 0x98);
  *(double *)(param_1 + 0x38) = *(double *)(param_1 + 0x38) + dVar8 * param_2;
  return;
}
