// PID step routine, decompiled

void FUN_00101c10(long param_1,double param_2)
{
  double dVar1;
  double dVar2;
  double dVar3;
  double dVar4;
  double dVar5;
  dVar1 = *(double *)(param_1 + 0x28) - *(double *)(param_1 + 0x60);
  *(double *)(param_1 + 0x100) = dVar1;
  dVar2 = *(double *)(param_1 + 0x88) * -(*(double *)(param_1 + 0x48) - *(double *)(param_1 + 0x100)) * *(double *)(param_1 + 0xc0);
  *(double *)(param_1 + 0x80) = dVar2;
  dVar3 = *(double *)(param_1 + 0x18) * *(double *)(param_1 + 0x100) + *(double *)(param_1 + 0x10) + *(double *)(param_1 + 0x80);
  *(double *)(param_1 + 0xb8) = dVar3;
  if (*(bool *)(param_1 + 0x98)) {
    *(double *)(param_1 + 0x108) = *(double *)(param_1 + 0xd0);
  }
  else {
    *(double *)(param_1 + 0x108) = *(double *)(param_1 + 0xb8);
  }
  dVar4 = *(bool *)(param_1 + 0xf8) ? *(double *)(param_1 + 0x50) * *(double *)(param_1 + 0x100) : 0.0;
  *(double *)(param_1 + 0x10) = *(double *)(param_1 + 0x10) + dVar4 * param_2;
  dVar5 = (*(double *)(param_1 + 0x100) - *(double *)(param_1 + 0x48)) * *(double *)(param_1 + 0xc0);
  *(double *)(param_1 + 0x48) = *(double *)(param_1 + 0x48) + dVar5 * param_2;
  return;
}
